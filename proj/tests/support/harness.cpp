#include "harness.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "hls/parser.hpp"
#include "hls/sema.hpp"

#ifndef HLS_SAMPLES_DIR
#error HLS_SAMPLES_DIR must be defined
#endif

namespace hls::testing {

std::string Mode::name() const {
  std::string s = rs && bb ? "rs+bb" : rs ? "rs" : bb ? "bb" : "none";
  return s + (shared ? "/shared" : "/flat");
}

std::vector<Mode> all_modes() {
  std::vector<Mode> out;
  for (int alu = 0; alu < 2; ++alu)
    for (int k = 0; k < 4; ++k) out.push_back({(k & 1) != 0, (k & 2) != 0, alu == 1});
  return out;
}

CompileOptions options(const Mode& m) {
  CompileOptions o;
  o.rs = m.rs;
  o.bb = m.bb;
  if (m.shared) o.lower.alu = LowerOptions::Alu::Shared;
  return o;
}

Compiled compile(const std::string& src, const CompileOptions& opt, const std::string& name) {
  DiagSink diags(name);
  try {
    return compile_source(src, diags, name, opt);
  } catch (const CompileError& e) {
    std::string msg;
    for (const auto& d : e.diagnostics()) msg += format_diagnostic(name, d) + "\n";
    throw std::runtime_error(msg + src);
  }
}

Outcome simulate(const Compiled& c, const std::vector<std::string>& names, int64_t max_cycles, SimConfig cfg) {
  Simulator sim(c.module, c.programs, std::move(cfg));
  SimResult r = sim.run(max_cycles);
  Outcome o;
  o.termination = r.termination;
  o.cycles = r.cycles;
  for (const auto& n : names) o.values[n] = sim.value(n);
  return o;
}

std::optional<std::map<std::string, int64_t>> oracle(const std::string& src, const std::vector<std::string>& names,
                                                     const std::string& process) {
  DiagSink diags("oracle");
  ast::Module a = parse_source(src, diags, "oracle");
  throw_if_errors(diags);
  TypedModule m = analyze(a, diags);
  throw_if_errors(diags);
  InterpResult r = interpret_process(m, process);
  if (!r.completed) return std::nullopt;
  std::map<std::string, int64_t> out;
  for (const auto& n : names) out[n] = r.store.get(m.find_object(n));
  return out;
}

int vhdl_state_count(const std::string& vhdl) {
  static const std::regex re(R"(type\s+pro_states\s+is\s*\(([^)]*)\))");
  std::smatch m;
  if (!std::regex_search(vhdl, m, re)) return -1;
  std::string body = m[1].str();
  int n = 1;
  for (char ch : body)
    if (ch == ',') ++n;
  return n;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sample(const std::string& name) { return read_text(std::string(HLS_SAMPLES_DIR) + "/" + name); }

}  // namespace hls::testing

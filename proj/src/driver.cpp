#include "hls/driver.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "hls/bbsched.hpp"
#include "hls/parser.hpp"
#include "hls/rsopt.hpp"
#include "hls/sema.hpp"

namespace hls {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string inline_includes(const std::filesystem::path& path, std::vector<std::filesystem::path>& stack) {
  auto canon = std::filesystem::weakly_canonical(path);
  if (std::find(stack.begin(), stack.end(), canon) != stack.end())
    throw IoError("recursive include of '" + path.string() + "'");
  stack.push_back(canon);
  static const std::regex inc(R"re(^\s*include\s+"?([^";\s]+)"?\s*;\s*$)re");
  std::istringstream in(read_file(path));
  std::string out;
  for (std::string line; std::getline(in, line);) {
    std::smatch m;
    if (std::regex_match(line, m, inc)) {
      out += inline_includes(path.parent_path() / m[1].str(), stack);
    } else {
      out += line + "\n";
    }
  }
  stack.pop_back();
  return out;
}

}  // namespace

std::string load_source(const std::string& path) {
  std::vector<std::filesystem::path> stack;
  return inline_includes(path, stack);
}

std::vector<MProgram> lower_module(const TypedModule& m, const CompileOptions& opt) {
  std::vector<MProgram> out;
  for (size_t i = 0; i < m.processes.size(); ++i) {
    MProgram p = compact(lower_process(m, static_cast<int>(i), opt.lower));
    if (opt.bb || m.processes[i].schedule_bb) {
      SchedOptions so;
      so.max_par = opt.max_par;
      if (opt.lower.alu == LowerOptions::Alu::Shared) so.alu_units = opt.lower.units;
      p = schedule(p, so);
    }
    out.push_back(std::move(p));
  }
  return out;
}

Compiled compile_source(std::string_view source, DiagSink& diags, const std::string& name,
                        const CompileOptions& opt) {
  Compiled c;
  c.ast = parse_source(source, diags, name);
  throw_if_errors(diags);
  c.module = analyze(c.ast, diags);
  throw_if_errors(diags);
  if (opt.fold) {
    c.module = fold_constants(std::move(c.module), diags);
    throw_if_errors(diags);
  }
  if (opt.rs) c.module = optimize_module(std::move(c.module));
  c.programs = lower_module(c.module, opt);
  return c;
}

}  // namespace hls

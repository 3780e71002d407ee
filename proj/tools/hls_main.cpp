// hls: ConPro compiler driver.
//
//   hls ex.cp --emit mcode,vhdl -o out/
//   hls ex.cp --sim --cycles 5000 --trace ex.trace --watch d,x

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "hls/bbsched.hpp"
#include "hls/driver.hpp"
#include "hls/parser.hpp"
#include "hls/rsopt.hpp"
#include "hls/rtl.hpp"
#include "hls/sim.hpp"

namespace fs = std::filesystem;
using namespace hls;

namespace {

enum Exit { Ok = 0, Diag = 1, Io = 2, Internal = 3, Deadlock = 4, CycleLimit = 5 };

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, sep);)
    if (!t.empty()) out.push_back(t);
  return out;
}

struct Options {
  std::vector<std::string> inputs;
  std::vector<std::string> emit;
  std::vector<std::string> opt;
  bool no_fold = false;
  std::string alu = "flat";
  int max_par = 0;
  bool sim = false;
  int64_t cycles = 100000;
  std::string trace;
  std::vector<std::string> watch;
  std::string out_dir = ".";
  std::vector<std::string> dump;
  std::vector<std::string> scheduler;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write '" + p.string() + "'");
}

CompileOptions compile_options(const Options& o) {
  CompileOptions c;
  c.fold = !o.no_fold;
  for (const auto& x : o.opt) {
    if (x == "rs") c.rs = true;
    else if (x == "bb") c.bb = true;
    else throw CLI::ValidationError("--opt", "unknown optimisation '" + x + "'");
  }
  if (o.alu == "flat") {
    c.lower.alu = LowerOptions::Alu::Flat;
  } else if (o.alu.rfind("shared", 0) == 0) {
    c.lower.alu = LowerOptions::Alu::Shared;
    if (o.alu.size() > 6) {
      if (o.alu[6] != ':') throw CLI::ValidationError("--alu", "expected shared[:k]");
      c.lower.units = std::stoi(o.alu.substr(7));
      if (c.lower.units < 1) throw CLI::ValidationError("--alu", "unit count must be positive");
    }
  } else {
    throw CLI::ValidationError("--alu", "expected flat or shared[:k]");
  }
  c.max_par = o.max_par;
  return c;
}

std::map<std::string, SchedPolicy> policies(const Options& o) {
  std::map<std::string, SchedPolicy> out;
  for (const auto& s : o.scheduler) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--scheduler", "expected obj=fifo|static");
    std::string v = s.substr(eq + 1);
    if (v != "fifo" && v != "static") throw CLI::ValidationError("--scheduler", "unknown policy '" + v + "'");
    out[s.substr(0, eq)] = v == "fifo" ? SchedPolicy::Fifo : SchedPolicy::Static;
  }
  return out;
}

std::string rtl_text(const Compiled& c, const std::string& mod) {
  std::string out;
  for (size_t i = 0; i < c.programs.size(); ++i) {
    out += state_list_text(build_state_list(c.module, c.programs[i], mod));
    out += "\n";
  }
  for (const auto& s : build_schedulers(c.module, c.programs)) out += scheduler_text(s) + "\n";
  return out;
}

int run_file(const std::string& input, const Options& o, bool color) {
  const std::string mod = fs::path(input).stem().string();
  const fs::path dir(o.out_dir);
  std::string src = load_source(input);
  DiagSink diags(input);
  CompileOptions copt = compile_options(o);
  Compiled c;
  try {
    c = compile_source(src, diags, mod, copt);
  } catch (const CompileError& e) {
    for (const auto& d : e.diagnostics()) std::cerr << format_diagnostic(input, d, color) << "\n";
    return Diag;
  }
  for (const auto& d : diags.all())
    if (d.severity == Severity::Warning) std::cerr << format_diagnostic(input, d, color) << "\n";
  for (const auto& [name, _] : policies(o))
    if (c.module.find_object(name) < 0) {
      std::cerr << input << ": error: --scheduler names unknown object '" << name << "'\n";
      return Diag;
    }

  std::set<std::string> emit(o.emit.begin(), o.emit.end());
  if (!emit.empty() || !o.dump.empty()) fs::create_directories(dir);
  if (emit.count("ast")) write_file(dir / (mod + ".ast"), print_module(c.ast));
  if (emit.count("mcode"))
    for (const auto& p : c.programs) write_file(dir / (mod + "_" + p.process + ".uc"), emit_text(p));
  if (emit.count("rtl")) write_file(dir / (mod + ".rtl"), rtl_text(c, mod));
  if (emit.count("vhdl")) {
    VhdlDesign d = emit_vhdl(c.module, c.programs, mod);
    for (const auto& f : d.files) write_file(dir / f.name, f.text);
    write_file(dir / (mod + ".manifest"), d.manifest);
  }
  for (const auto& what : o.dump) {
    if (what == "rs") {
      std::string text;
      RsOptions ro;
      ro.keep_log = true;
      for (const auto& p : c.module.processes) {
        text += "process " + p.name + "\n";
        for (const auto& l : optimize_process(c.module, p.body, ro).log) text += l + "\n";
      }
      write_file(dir / (mod + ".rs"), text);
    } else if (what == "ddg") {
      std::string text;
      for (const auto& p : c.programs) text += ddg_dot(p);
      write_file(dir / (mod + ".dot"), text);
    }
  }

  std::map<std::string, size_t> states;
  for (const auto& p : c.programs) states[p.process] = build_state_list(c.module, p, mod).states.size();
  if (!o.sim) {
    for (const auto& p : c.programs)
      std::cout << mod << "." << p.process << ": " << states[p.process] << " states, " << p.code.size()
                << " instructions\n";
    return Ok;
  }

  SimConfig cfg;
  cfg.policy = policies(o);
  cfg.trace = !o.trace.empty() || !o.watch.empty();
  cfg.watch = o.watch;
  Simulator sim(c.module, c.programs, cfg);
  SimResult r = sim.run(o.cycles);
  if (!o.trace.empty()) {
    std::string text;
    for (const auto& e : r.trace) text += trace_line(e) + "\n";
    write_file(o.trace, text);
  } else if (!o.watch.empty()) {
    for (const auto& e : r.trace)
      if (e.kind == "write") std::cout << trace_line(e) << "\n";
  }
  for (const auto& p : c.programs) {
    const char* st = "idle";
    switch (sim.status(p.process)) {
      case ProcStatus::Running: st = "running"; break;
      case ProcStatus::Ended: st = "ended"; break;
      case ProcStatus::Idle: break;
    }
    std::cout << mod << "." << p.process << ": " << states[p.process] << " states, " << p.code.size()
              << " instructions, " << st << "\n";
  }
  for (const auto& [p, ex] : r.uncaught) std::cout << mod << "." << p << ": uncaught exception " << ex << "\n";
  std::cout << mod << ": " << termination_name(r.termination) << " after " << r.cycles << " cycles\n";
  for (const auto& w : o.watch) {
    int id = c.module.find_object(w);
    if (id < 0 || c.module.obj(id).array_size > 0) continue;
    std::cout << "  " << w << " = " << sim.value(w) << "\n";
  }
  if (r.termination == Termination::Deadlock) {
    for (const auto& b : r.deadlock) {
      std::cerr << mod << ": " << b.process << " blocked on " << b.object << " " << b.op;
      if (!b.holders.empty()) {
        std::cerr << " held by";
        for (const auto& h : b.holders) std::cerr << " " << h;
      }
      std::cerr << "\n";
    }
    return Deadlock;
  }
  if (r.termination == Termination::CycleLimit) return CycleLimit;
  return Ok;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  std::string emit, opt, watch, dump;
  CLI::App app{"ConPro high-level synthesis"};
  app.add_option("inputs", o.inputs, "source files")->required()->check(CLI::ExistingFile);
  app.add_option("--emit", emit, "ast,mcode,rtl,vhdl");
  app.add_option("--opt", opt, "rs,bb");
  app.add_flag("--no-fold", o.no_fold, "keep constant expressions");
  app.add_option("--alu", o.alu, "flat or shared[:k]");
  app.add_option("--max-par", o.max_par, "instructions per bound group (0: unlimited)");
  app.add_flag("--sim", o.sim, "simulate after compilation");
  app.add_option("--cycles", o.cycles, "simulation cycle limit");
  app.add_option("--trace", o.trace, "trace file");
  app.add_option("--watch", watch, "objects whose writes are traced");
  app.add_option("-o,--output", o.out_dir, "output directory");
  app.add_option("--dump", dump, "rs,ddg");
  app.add_option("--scheduler", o.scheduler, "obj=fifo|static")->take_all();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? Ok : Diag;
  }
  o.emit = split(emit);
  o.opt = split(opt);
  o.watch = split(watch);
  o.dump = split(dump);
  for (const auto& e : o.emit)
    if (e != "ast" && e != "mcode" && e != "rtl" && e != "vhdl") {
      std::cerr << "hls: unknown --emit kind '" << e << "'\n";
      return Diag;
    }
  for (const auto& d : o.dump)
    if (d != "rs" && d != "ddg") {
      std::cerr << "hls: unknown --dump kind '" << d << "'\n";
      return Diag;
    }
  const char* col = std::getenv("HLS_COLOR");
  bool color = col && std::string(col) != "0";

  int worst = Ok;
  for (const auto& in : o.inputs) {
    int rc;
    try {
      rc = run_file(in, o, color);
    } catch (const CLI::ValidationError& e) {
      std::cerr << "hls: " << e.what() << "\n";
      rc = Diag;
    } catch (const CompileError& e) {
      for (const auto& d : e.diagnostics()) std::cerr << format_diagnostic(e.file(), d, color) << "\n";
      rc = Diag;
    } catch (const IoError& e) {
      std::cerr << "hls: " << e.what() << "\n";
      rc = Io;
    } catch (const fs::filesystem_error& e) {
      std::cerr << "hls: " << e.what() << "\n";
      rc = Io;
    } catch (const std::exception& e) {
      std::cerr << "hls: internal error: " << e.what() << "\n";
      rc = Internal;
    }
    worst = std::max(worst, rc);
  }
  return worst;
}

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hls/ast.hpp"
#include "hls/diag.hpp"
#include "hls/mcode.hpp"
#include "hls/tir.hpp"

namespace hls {

struct CompileOptions {
  bool fold = true;
  bool rs = false;  // reference-stack optimisation
  bool bb = false;  // basic-block scheduling (all processes)
  LowerOptions lower;
  int max_par = 0;
};

struct Compiled {
  ast::Module ast;
  TypedModule module;
  std::vector<MProgram> programs;  // one per process, same order
};

/// Front to back: parse, analyze, fold, optimise, lower, compact, schedule.
/// Throws CompileError when diagnostics contain errors.
Compiled compile_source(std::string_view source, DiagSink& diags, const std::string& name = "top",
                        const CompileOptions& opt = {});

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Reads a source file and replaces `include "file";` lines by the contents
/// of the named file (relative to the including file), recursively.
std::string load_source(const std::string& path);

/// Lowers an already analyzed module.
std::vector<MProgram> lower_module(const TypedModule& m, const CompileOptions& opt = {});

}  // namespace hls

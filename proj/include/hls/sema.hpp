#pragma once

#include "hls/ast.hpp"
#include "hls/diag.hpp"
#include "hls/tir.hpp"

namespace hls {

/// Name resolution, typing, process-array replication, inline expansion and
/// shared-function process generation. Throws CompileError on errors.
TypedModule analyze(const ast::Module& module, DiagSink& diags);

/// Constant folding and dead local object elimination. Notes about removed
/// objects are added to `diags` and to `m.notes`.
TypedModule fold_constants(TypedModule m, DiagSink& diags);

/// Folds a single expression (used by the optimizers).
TExprP fold_expr(const TExprP& e);

/// True if evaluating the expression has no side effects and needs no
/// guarded access (queue and channel reads are side effects).
bool is_pure(const TypedModule& m, const TExpr& e);

/// Exception ids that can leave the block uncaught.
std::vector<int> escaping_exceptions(const TypedModule& m, const TBlock& b);

/// Processes that access the object (declaration order).
std::vector<int> object_accessors(const TypedModule& m, int obj);

}  // namespace hls

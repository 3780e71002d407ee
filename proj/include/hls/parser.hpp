#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "hls/ast.hpp"
#include "hls/lexer.hpp"

namespace hls {

/// Parses a complete token stream (ending in End) into a module.
ast::Module parse_module(const std::vector<Token>& tokens, DiagSink& diags,
                         std::string module_name = "top");

/// tokenize + parse_module.
ast::Module parse_source(std::string_view source, DiagSink& diags,
                         std::string module_name = "top");

/// Parses a standalone expression (used by tests and parameter parsing).
ast::ExprP parse_expression(std::string_view source, DiagSink& diags);

/// Canonical source text; re-parsing it yields an equal module.
std::string print_module(const ast::Module& m);
std::string print_expr(const ast::Expr& e);
std::string print_stmt(const ast::Stmt& s, int indent = 0);

}  // namespace hls

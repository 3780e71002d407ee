#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hls/diag.hpp"

namespace hls {

enum class TokKind {
  Keyword,
  Ident,
  Int,
  Logic,
  Char,
  String,
  Op,
  Punct,
  End,
};

struct Token {
  TokKind kind = TokKind::End;
  std::string text;  // exact source slice
  SourceLoc loc;
  size_t offset = 0;
  int64_t value = 0;  // numeric literals and chars
  int width = 0;      // logic literals: digit-derived width

  bool is(TokKind k, std::string_view t) const { return kind == k && text == t; }
  bool is_kw(std::string_view t) const { return is(TokKind::Keyword, t); }
  bool is_punct(std::string_view t) const { return is(TokKind::Punct, t); }
  bool is_op(std::string_view t) const { return is(TokKind::Op, t); }
};

bool is_keyword(std::string_view word);

/// Splits source text into tokens, skipping whitespace and `--` comments.
/// The last token is always End. Lexical errors are reported to `diags`
/// and abort with CompileError.
std::vector<Token> tokenize(std::string_view source, DiagSink& diags);

/// Unescaped content of a string literal token.
std::string string_value(const Token& t);

}  // namespace hls

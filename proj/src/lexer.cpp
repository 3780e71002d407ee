#include "hls/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace hls {

namespace {

constexpr std::string_view kKeywords[] = {
    "open",      "include",  "module",   "import",   "process",  "function", "return",
    "begin",     "end",      "with",     "reg",      "var",      "block",    "sig",
    "const",     "value",    "queue",    "channel",  "object",   "array",    "of",
    "type",      "component", "port",    "input",    "output",   "inout",    "export",
    "exception", "raise",    "try",      "if",       "then",     "else",     "match",
    "when",      "others",   "for",      "to",       "downto",   "step",     "do",
    "while",     "always",   "wait",     "in",       "int",      "logic",    "bool",
    "char",      "true",     "false",    "and",      "or",       "xor",      "not",
    "land",      "lor",      "lxor",     "lnot",     "lsl",      "lsr",      "to_int",
    "to_logic",  "to_char",  "to_bool",  "nanosec",  "microsec", "millisec", "sec",
    "hz",        "kilohz",   "megahz",   "gigahz",
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords)
    if (k == word) return true;
  return false;
}

std::vector<Token> tokenize(std::string_view src, DiagSink& diags) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;

  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f') {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }

    Token t;
    t.loc = {line, col};
    t.offset = i;

    if (ident_start(c)) {
      size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.text = std::string(src.substr(i, j - i));
      t.kind = is_keyword(t.text) ? TokKind::Keyword : TokKind::Ident;
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      if (c == '0' && j + 1 < src.size() &&
          (src[j + 1] == 'x' || src[j + 1] == 'b' || src[j + 1] == 'l')) {
        char base = src[j + 1];
        j += 2;
        size_t dstart = j;
        uint64_t v = 0;
        int digits = 0;
        bool overflow = false;
        while (j < src.size()) {
          char d = src[j];
          int dv = -1;
          if (d == '_') {
            ++j;
            continue;
          }
          if (base == 'x') {
            if (std::isdigit(static_cast<unsigned char>(d))) dv = d - '0';
            else if (d >= 'a' && d <= 'f') dv = d - 'a' + 10;
            else if (d >= 'A' && d <= 'F') dv = d - 'A' + 10;
          } else if (base == 'b') {
            if (d == '0' || d == '1') dv = d - '0';
          } else {
            if (d == '0' || d == 'L' || d == 'Z') dv = 0;
            else if (d == '1' || d == 'H') dv = 1;
          }
          if (dv < 0) break;
          int shift = base == 'x' ? 4 : 1;
          if (digits * shift + shift > 64 && (v >> (64 - shift)) != 0) overflow = true;
          v = (v << shift) | static_cast<uint64_t>(dv);
          ++digits;
          ++j;
        }
        if (digits == 0 || j == dstart) {
          advance(j - i);
          fail(diags, t.loc, "malformed numeric literal");
        }
        if (overflow) {
          advance(j - i);
          fail(diags, t.loc, "numeric literal exceeds 64 bits");
        }
        t.kind = TokKind::Logic;
        t.value = static_cast<int64_t>(v);
        t.width = std::min(64, base == 'x' ? digits * 4 : digits);
        t.text = std::string(src.substr(i, j - i));
        advance(j - i);
      } else {
        uint64_t v = 0;
        bool overflow = false;
        while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
          if (src[j] != '_') {
            uint64_t nv = v * 10 + static_cast<uint64_t>(src[j] - '0');
            if (nv / 10 != v) overflow = true;
            v = nv;
          }
          ++j;
        }
        if (overflow || v > static_cast<uint64_t>(INT64_MAX)) {
          advance(j - i);
          fail(diags, t.loc, "integer literal out of range");
        }
        t.kind = TokKind::Int;
        t.value = static_cast<int64_t>(v);
        t.text = std::string(src.substr(i, j - i));
        advance(j - i);
      }
      if (i < src.size() && ident_char(src[i])) {
        fail(diags, {line, col}, std::string("illegal character '") + src[i] + "' in numeric literal");
      }
    } else if (c == '\'') {
      // 'x' or '\n'-style escapes
      size_t j = i + 1;
      int64_t v = 0;
      if (j < src.size() && src[j] == '\\' && j + 1 < src.size()) {
        char e = src[j + 1];
        v = e == 'n' ? '\n' : e == 't' ? '\t' : e == '0' ? 0 : e;
        j += 2;
      } else if (j < src.size() && src[j] != '\n' && src[j] != '\'') {
        v = static_cast<unsigned char>(src[j]);
        j += 1;
      } else {
        fail(diags, t.loc, "unterminated character literal");
      }
      if (j >= src.size() || src[j] != '\'') fail(diags, t.loc, "unterminated character literal");
      ++j;
      t.kind = TokKind::Char;
      t.value = v;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (c == '"') {
      size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') {
        if (src[j] == '\\') ++j;
        ++j;
      }
      if (j >= src.size() || src[j] != '"') fail(diags, t.loc, "unterminated string literal");
      ++j;
      t.kind = TokKind::String;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else {
      static constexpr std::array<std::string_view, 6> kTwo{"<-", "<=", ">=", "<>", ":=", "<<"};
      std::string_view two = src.substr(i, 2);
      bool matched = false;
      for (auto op : kTwo) {
        if (two == op) {
          t.kind = TokKind::Op;
          t.text = std::string(op);
          advance(2);
          matched = true;
          break;
        }
      }
      if (!matched) {
        switch (c) {
          case '+': case '-': case '*': case '/': case '%': case '<': case '>': case '=':
          case '@': case '~': case '#':
            t.kind = TokKind::Op;
            break;
          case ';': case ',': case ':': case '.': case '(': case ')': case '[': case ']':
          case '{': case '}':
            t.kind = TokKind::Punct;
            break;
          default: {
            std::string ch = std::isprint(static_cast<unsigned char>(c))
                                 ? std::string(1, c)
                                 : "\\x" + std::to_string(static_cast<unsigned char>(c));
            fail(diags, t.loc, "illegal character '" + ch + "'");
          }
        }
        t.text = std::string(1, c);
        advance(1);
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = TokKind::End;
  end.loc = {line, col};
  end.offset = src.size();
  out.push_back(end);
  return out;
}

std::string string_value(const Token& t) {
  std::string out;
  if (t.text.size() < 2) return out;
  for (size_t i = 1; i + 1 < t.text.size(); ++i) {
    char c = t.text[i];
    if (c == '\\' && i + 2 < t.text.size()) {
      char e = t.text[++i];
      out += e == 'n' ? '\n' : e == 't' ? '\t' : e;
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace hls

#include "hls/types.hpp"

#include <array>
#include <utility>

namespace hls {

std::string type_suffix(DataType t) {
  char c = 'I';
  switch (t.base) {
    case BaseType::Int: c = 'I'; break;
    case BaseType::Logic: c = 'L'; break;
    case BaseType::Bool: c = 'B'; break;
    case BaseType::Char: c = 'C'; break;
  }
  return std::string(1, c) + std::to_string(t.width);
}

std::optional<DataType> parse_type_suffix(std::string_view s) {
  if (s.size() < 2) return std::nullopt;
  DataType t;
  switch (s[0]) {
    case 'I': t.base = BaseType::Int; break;
    case 'L': t.base = BaseType::Logic; break;
    case 'B': t.base = BaseType::Bool; break;
    case 'C': t.base = BaseType::Char; break;
    default: return std::nullopt;
  }
  int w = 0;
  for (char c : s.substr(1)) {
    if (c < '0' || c > '9') return std::nullopt;
    w = w * 10 + (c - '0');
    if (w > 1000) return std::nullopt;
  }
  if (w < 1 || w > kMaxWidth) return std::nullopt;
  t.width = w;
  return t;
}

std::string type_name(DataType t) {
  switch (t.base) {
    case BaseType::Int: return "int[" + std::to_string(t.width) + "]";
    case BaseType::Logic:
      return t.width == 1 ? "logic" : "logic[" + std::to_string(t.width) + "]";
    case BaseType::Bool: return "bool";
    case BaseType::Char: return "char";
  }
  return "?";
}

namespace {

struct OpName {
  Op op;
  std::string_view text;
};

constexpr std::array<OpName, 24> kOpNames{{
    {Op::Add, "+"},     {Op::Sub, "-"},     {Op::Mul, "*"},   {Op::Div, "/"},
    {Op::Mod, "%"},     {Op::Land, "land"}, {Op::Lor, "lor"}, {Op::Lxor, "lxor"},
    {Op::Lsl, "lsl"},   {Op::Lsr, "lsr"},   {Op::Lt, "<"},    {Op::Le, "<="},
    {Op::Gt, ">"},      {Op::Ge, ">="},     {Op::Eq, "="},    {Op::Ne, "<>"},
    {Op::And, "and"},   {Op::Or, "or"},     {Op::Xor, "xor"}, {Op::Concat, "@"},
    {Op::Log, "~"},     {Op::Neg, "-"},     {Op::Lnot, "lnot"}, {Op::Not, "not"},
}};

uint64_t mask(int w) { return w >= 64 ? ~uint64_t{0} : ((uint64_t{1} << w) - 1); }

}  // namespace

std::string_view op_text(Op op) {
  for (const auto& n : kOpNames)
    if (n.op == op) return n.text;
  return "?";
}

std::optional<Op> op_from_text(std::string_view s, bool unary) {
  if (unary) {
    if (s == "-") return Op::Neg;
    if (s == "lnot") return Op::Lnot;
    if (s == "not") return Op::Not;
    return std::nullopt;
  }
  for (const auto& n : kOpNames) {
    if (n.op == Op::Neg || n.op == Op::Lnot || n.op == Op::Not) continue;
    if (n.text == s) return n.op;
  }
  return std::nullopt;
}

bool is_relational(Op op) {
  return op == Op::Lt || op == Op::Le || op == Op::Gt || op == Op::Ge || op == Op::Eq ||
         op == Op::Ne;
}

bool is_boolean(Op op) { return op == Op::And || op == Op::Or || op == Op::Xor || op == Op::Not; }

bool is_unary(Op op) { return op == Op::Neg || op == Op::Lnot || op == Op::Not; }

int64_t wrap(DataType t, int64_t v) {
  int w = t.width;
  if (w >= 64) return v;
  uint64_t bits = static_cast<uint64_t>(v) & mask(w);
  if (t.base == BaseType::Int && (bits >> (w - 1)) & 1u) bits |= ~mask(w);
  return static_cast<int64_t>(bits);
}

int64_t convert(DataType from, DataType to, int64_t v) {
  // Canonical values are already extended according to the source type.
  (void)from;
  if (to.base == BaseType::Bool) return wrap(DataType::logic(1), v);
  return wrap(to, v);
}

bool fits(DataType t, int64_t v) {
  if (t.width >= 64) return true;
  if (t.base == BaseType::Int) {
    int64_t lo = -(int64_t{1} << (t.width - 1));
    int64_t hi = (int64_t{1} << (t.width - 1)) - 1;
    return v >= lo && v <= hi;
  }
  return v >= 0 && static_cast<uint64_t>(v) <= mask(t.width);
}

int signed_bits(int64_t v) {
  for (int w = 1; w < 64; ++w) {
    int64_t lo = -(int64_t{1} << (w - 1));
    int64_t hi = (int64_t{1} << (w - 1)) - 1;
    if (v >= lo && v <= hi) return w;
  }
  return 64;
}

int unsigned_bits(uint64_t v) {
  int w = 1;
  while (w < 64 && (v >> w) != 0) ++w;
  return w;
}

int ceil_log2(uint64_t v) {
  int r = 0;
  uint64_t p = 1;
  while (p < v && r < 64) {
    p <<= 1;
    ++r;
  }
  return r;
}

DataType binary_result_type(Op op, DataType lhs, DataType rhs) {
  if (is_relational(op)) return DataType::boolean();
  if (op == Op::Concat) return DataType::logic(std::min(kMaxWidth, lhs.width + rhs.width));
  return lhs;
}

namespace {

bool is_signed(DataType t) { return t.base == BaseType::Int; }

bool less_than(DataType t, int64_t a, int64_t b) {
  if (is_signed(t)) return a < b;
  return static_cast<uint64_t>(a) < static_cast<uint64_t>(b);
}

}  // namespace

int64_t eval_binary(Op op, DataType lt, int64_t a, DataType rt, int64_t b) {
  DataType res = binary_result_type(op, lt, rt);
  auto ua = static_cast<uint64_t>(a);
  auto ub = static_cast<uint64_t>(b);
  switch (op) {
    case Op::Add: return wrap(res, static_cast<int64_t>(ua + ub));
    case Op::Sub: return wrap(res, static_cast<int64_t>(ua - ub));
    case Op::Mul: return wrap(res, static_cast<int64_t>(ua * ub));
    case Op::Div:
      if (b == 0) return 0;
      if (is_signed(lt)) {
        if (a == INT64_MIN && b == -1) return wrap(res, a);
        return wrap(res, a / b);
      }
      return wrap(res, static_cast<int64_t>(ua / ub));
    case Op::Mod:
      if (b == 0) return 0;
      if (is_signed(lt)) {
        if (a == INT64_MIN && b == -1) return 0;
        return wrap(res, a % b);
      }
      return wrap(res, static_cast<int64_t>(ua % ub));
    case Op::Land: return wrap(res, static_cast<int64_t>(ua & ub));
    case Op::Lor: return wrap(res, static_cast<int64_t>(ua | ub));
    case Op::Lxor: return wrap(res, static_cast<int64_t>(ua ^ ub));
    case Op::Lsl:
      if (b < 0 || b >= lt.width) return 0;
      return wrap(res, static_cast<int64_t>(ua << b));
    case Op::Lsr: {
      if (b < 0 || b >= lt.width) return 0;
      uint64_t bits = ua & mask(lt.width);
      return wrap(res, static_cast<int64_t>(bits >> b));
    }
    case Op::Lt: return less_than(lt, a, b) ? 1 : 0;
    case Op::Le: return !less_than(lt, b, a) ? 1 : 0;
    case Op::Gt: return less_than(lt, b, a) ? 1 : 0;
    case Op::Ge: return !less_than(lt, a, b) ? 1 : 0;
    case Op::Eq: return a == b ? 1 : 0;
    case Op::Ne: return a != b ? 1 : 0;
    case Op::And: return (a != 0 && b != 0) ? 1 : 0;
    case Op::Or: return (a != 0 || b != 0) ? 1 : 0;
    case Op::Xor: return ((a != 0) != (b != 0)) ? 1 : 0;
    case Op::Concat: {
      uint64_t lo = ub & mask(rt.width);
      uint64_t hi = (ua & mask(lt.width)) << (rt.width >= 64 ? 0 : rt.width);
      return wrap(res, static_cast<int64_t>(hi | lo));
    }
    case Op::Log: {
      // ceil(log_b(v)) by repeated multiplication
      if (a <= 1 || b <= 1) return 0;
      int64_t n = 0;
      uint64_t p = 1;
      while (p < ua) {
        p *= ub;
        ++n;
      }
      return wrap(res, n);
    }
    case Op::Neg:
    case Op::Lnot:
    case Op::Not: break;
  }
  return 0;
}

int64_t eval_unary(Op op, DataType t, int64_t a) {
  switch (op) {
    case Op::Neg: return wrap(t, static_cast<int64_t>(0u - static_cast<uint64_t>(a)));
    case Op::Lnot: return wrap(t, ~a);
    case Op::Not: return a == 0 ? 1 : 0;
    default: return a;
  }
}

}  // namespace hls

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hls {

enum class BaseType { Int, Logic, Bool, Char };

/// Bit-true ordinal data type. INT widths include the sign bit.
struct DataType {
  BaseType base = BaseType::Int;
  int width = 8;

  static DataType integer(int w) { return {BaseType::Int, w}; }
  static DataType logic(int w) { return {BaseType::Logic, w}; }
  static DataType boolean() { return {BaseType::Bool, 1}; }
  static DataType character() { return {BaseType::Char, 8}; }

  bool operator==(const DataType&) const = default;
};

constexpr int kMaxWidth = 64;

/// Short suffix form used by the microcode assembler: I9, L8, B1, C8.
std::string type_suffix(DataType t);
std::optional<DataType> parse_type_suffix(std::string_view s);
/// Source-level spelling: int[8], logic[4], bool, char.
std::string type_name(DataType t);

enum class Op {
  Add, Sub, Mul, Div, Mod,
  Land, Lor, Lxor, Lsl, Lsr,
  Lt, Le, Gt, Ge, Eq, Ne,
  And, Or, Xor,
  Concat, Log,
  // unary
  Neg, Lnot, Not,
};

std::string_view op_text(Op op);
std::optional<Op> op_from_text(std::string_view s, bool unary);
bool is_relational(Op op);
bool is_boolean(Op op);  // and/or/xor/not
bool is_unary(Op op);

/// Canonical value of a typed quantity: INT sign-extended, everything else
/// zero-extended. Bit patterns of 64-bit LOGIC values may appear negative.
int64_t wrap(DataType t, int64_t v);
/// Re-typing with width adaptation: sign-extends INT sources, zero-extends others.
int64_t convert(DataType from, DataType to, int64_t v);
bool fits(DataType t, int64_t v);
/// Minimal signed width holding v.
int signed_bits(int64_t v);
/// Minimal unsigned width holding v (v >= 0); 1 for 0.
int unsigned_bits(uint64_t v);
int ceil_log2(uint64_t v);

/// Result type of a binary operation over operands of `operand` type.
DataType binary_result_type(Op op, DataType lhs, DataType rhs);

/// Evaluates with two's-complement wrap at the result width. Division by zero
/// yields 0 (the hardware divider output is unspecified; 0 keeps runs reproducible).
int64_t eval_binary(Op op, DataType lhs_type, int64_t a, DataType rhs_type, int64_t b);
int64_t eval_unary(Op op, DataType t, int64_t a);

}  // namespace hls

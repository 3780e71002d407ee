#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hls/tir.hpp"

namespace hls {

enum class MOperandKind {
  Object,  // named register, signal, variable, queue, ... (optionally element / bit range)
  Const,
  Immed,   // $immed.[n]: combinational, consumed in the same bound group
  Temp,    // $temp.[n]: temporary register of the shared ALU model
  Alu,     // $alu.[n]: shared ALU unit
};

struct MOperand {
  MOperandKind kind = MOperandKind::Const;
  std::string name;
  int64_t value = 0;              // constant value or $immed/$temp/$alu number
  std::vector<MOperand> index;    // array element selector (0 or 1 entries)
  int lo = -1, hi = -1;           // bit range
  std::optional<DataType> conv;   // `x:I8`

  bool operator==(const MOperand&) const = default;

  static MOperand object(std::string n) {
    MOperand o;
    o.kind = MOperandKind::Object;
    o.name = std::move(n);
    return o;
  }
  static MOperand constant(int64_t v) {
    MOperand o;
    o.value = v;
    return o;
  }
  static MOperand numbered(MOperandKind k, int64_t n) {
    MOperand o;
    o.kind = k;
    o.value = n;
    return o;
  }
};

enum class MOpcode { Move, Expr, Bind, Jump, FalseJump, Fun, Label, Special, Nop };

std::string_view opcode_name(MOpcode op);

struct MInstr {
  MOpcode op = MOpcode::Nop;
  std::vector<MOperand> ops;  // move: dst src; expr: dst a [b]; falsejump: cond; fun: object args...
  Op alu = Op::Add;           // expr operation
  int count = 0;              // bind size
  std::string target;         // label name, jump target, special tag
  std::string method;         // fun
  int unit = 0;               // shared ALU unit of an expr, 0 if dedicated

  bool operator==(const MInstr&) const = default;

  bool is_data() const { return op == MOpcode::Move || op == MOpcode::Expr; }
};

/// One line of the import or data segment.
struct MDecl {
  std::string kind;  // register, signal, variable, temp, queue, mutex, process, ...
  std::string name;
  std::optional<DataType> type;
  int size = 0;      // arrays

  bool operator==(const MDecl&) const = default;
};

struct MProgram {
  std::string process;
  std::vector<MDecl> imports;
  std::vector<MDecl> data;
  std::vector<MInstr> code;

  bool operator==(const MProgram&) const = default;
  const MDecl* find_decl(const std::string& name) const;
};

struct LowerOptions {
  enum class Alu { Flat, Shared } alu = Alu::Flat;
  int units = 1;             // shared ALU units
  bool bind_source = true;   // false: bounded blocks become plain sequences
};

/// Lowers one process body to raw (uncompacted) microcode.
MProgram lower_process(const TypedModule& m, int process, const LowerOptions& opt = {});

/// Removes nops, merges label chains, drops unreachable code after jumps and
/// retargets labels at the end of the program to %END.
MProgram compact(MProgram p);

std::string operand_text(const MOperand& o);
std::string instr_text(const MInstr& i);
std::string emit_text(const MProgram& p);

struct MParseError : std::runtime_error {
  int line;
  MParseError(int l, const std::string& msg) : std::runtime_error(msg), line(l) {}
};

/// Inverse of emit_text. Checks opcodes, arities, duplicate labels and jump targets.
MProgram parse_text(std::string_view text);

/// Structural checks: bind sizes, label uniqueness, jump targets. Returns the
/// first violation or an empty string.
std::string check_program(const MProgram& p);

/// A control state: one instruction, or a bind with its members.
struct MState {
  std::string label;  // i<N>_<kind>[_k]
  int first = 0;      // instruction index (the bind itself for groups)
  int count = 1;      // instructions covered including the bind
  bool bind = false;
};

/// States in program order. `targets` maps every label (and %END) to a state
/// index; %END is states.size().
std::vector<MState> program_states(const MProgram& p, std::map<std::string, int>* targets = nullptr);

/// Opcode names in order, binds written as `bindN`, labels skipped.
std::vector<std::string> opcode_sequence(const MProgram& p, bool skip_nop = true);

/// Tracks $immed types while walking a program in order and resolves the type
/// of any operand from the segment declarations.
class MTypeEnv {
 public:
  explicit MTypeEnv(const MProgram& p);
  /// Type of `o`; constants take `context`.
  DataType type(const MOperand& o, std::optional<DataType> context = std::nullopt) const;
  /// Type of the stored location (without conversion or bit range).
  DataType base_type(const MOperand& o) const;
  /// Records the result type of an instruction writing an immediate.
  void define(const MInstr& i);
  /// Operand types of an expr (a, b), with constants typed from the other side.
  std::pair<DataType, DataType> expr_types(const MInstr& i) const;

 private:
  std::map<std::string, DataType> names_;
  std::map<int64_t, DataType> immeds_, temps_;
};

}  // namespace hls

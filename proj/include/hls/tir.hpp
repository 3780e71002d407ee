#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hls/diag.hpp"
#include "hls/types.hpp"

namespace hls {

enum class ObjKind {
  Reg,
  Var,
  Sig,
  Const,
  Queue,
  Channel,
  Mutex,
  Semaphore,
  Event,
  Barrier,
  Timer,
  Process,
  RamBlock,
  Stub,  // parsed but inert (system, uart, random, components)
};

std::string_view obj_kind_name(ObjKind k);

enum class SchedPolicy { Static, Fifo };

struct Object {
  int id = -1;
  std::string name;
  ObjKind kind = ObjKind::Reg;
  DataType type;
  bool global = true;
  std::string owner;   // owning process for locals
  int array_size = 0;  // register/var/signal arrays
  bool exported = false;
  bool inferred = false;  // compiler-generated (loop counters, temporaries, ...)
  bool dead = false;      // removed by dead-object elimination
  SourceLoc loc;

  // RAM binding for variables
  int block = -1;
  int cell = -1;
  int cells = 0;  // RAM blocks: number of cells

  // abstract-object parameters
  SchedPolicy policy = SchedPolicy::Static;
  int depth = 8;
  int64_t init = 0;
  bool latched = false;
  bool buffered = true;
  int timer_mode = 0;
  int64_t interval = 0;  // timer interval in cycles
  int group = 0;         // barrier group size
  std::string stub_type;

  bool is_storage() const {
    return kind == ObjKind::Reg || kind == ObjKind::Var || kind == ObjKind::Sig;
  }
};

// ------------------------------------------------------------------ exprs

enum class TExprKind {
  Const,
  Obj,      // scalar object read (register, var, signal, queue, channel)
  Elem,     // array element: obj, args[0] = index
  Bits,     // args[0] bit range lo..hi
  Unary,
  Binary,
  Convert,  // args[0] re-typed to `type`
};

struct TExpr;
using TExprP = std::shared_ptr<const TExpr>;

struct TExpr {
  TExprKind kind = TExprKind::Const;
  DataType type;
  int64_t value = 0;
  int obj = -1;
  Op op = Op::Add;
  int lo = 0, hi = 0;
  std::vector<TExprP> args;
};

TExprP make_const(DataType t, int64_t v);
TExprP make_obj(int obj, DataType t);
TExprP make_elem(int obj, DataType t, TExprP index);
TExprP make_bits(TExprP base, int lo, int hi);
TExprP make_unary(Op op, DataType t, TExprP a);
TExprP make_binary(Op op, DataType t, TExprP a, TExprP b);
TExprP make_convert(DataType t, TExprP a);

bool expr_equal(const TExpr& a, const TExpr& b);

/// Object read callback: `index` is -1 for scalar reads, otherwise the raw
/// element index (the callee reduces it modulo the array size).
using ReadFn = std::function<int64_t(int obj, int64_t index)>;
/// Bit-true evaluation of a typed expression.
int64_t eval_expr(const TExpr& e, const ReadFn& read);
/// Element index reduced into 0..size-1.
int64_t index_mod(int64_t i, int size);
int expr_size(const TExpr& e);  // operator node count

/// Assignment target.
struct TLhs {
  int obj = -1;
  TExprP index;     // array element
  int lo = -1, hi = -1;  // bit range write
  DataType type;    // type of the written location
};

// -------------------------------------------------------------- statements

enum class TStmtKind {
  Assign,
  Bind,    // body: assignments evaluated against the same pre-state
  If,
  Match,
  For,
  While,
  Always,
  Wait,      // cycles
  WaitCond,  // cond [with body] [else else_b]
  Method,    // obj.method(args)
  Call,      // shared function call
  Raise,
  Try,
};

struct TStmt;
using TStmtP = std::shared_ptr<const TStmt>;
using TBlock = std::vector<TStmtP>;

struct TChoice {
  int64_t lo = 0, hi = 0;  // inclusive, lo <= hi
};

struct TArm {
  std::vector<TChoice> choices;
  bool others = false;
  TBlock body;
};

struct THandler {
  std::vector<int> excs;  // exception ids (1-based)
  bool others = false;
  TBlock body;
};

struct TStmt {
  TStmtKind kind = TStmtKind::Assign;
  SourceLoc loc;

  TLhs lhs;
  TExprP rhs;

  TExprP cond;  // if / while / wait / match subject
  TBlock body;  // bind list, loop body, then-branch, try body, wait-with
  TBlock else_b;
  std::vector<TArm> arms;
  std::vector<THandler> handlers;

  // for loops
  int loop_obj = -1;
  TExprP from, to;
  int64_t step = 1;
  bool downto = false;

  // method / call
  int obj = -1;  // object, or function index for Call
  std::string method;
  std::vector<TExprP> args;
  std::vector<TLhs> dsts;

  int exc = 0;
  int64_t cycles = 0;
};

// ----------------------------------------------------------------- module

struct TProcess {
  std::string name;
  SourceLoc loc;
  int obj = -1;  // process object id
  std::vector<int> locals;
  TBlock body;
  int function = -1;  // index into functions for FUN_ processes
  bool schedule_bb = false;  // `with schedule="basicblock"`
};

struct TFunction {
  std::string name;
  std::vector<int> args;  // ARG_FUN_f_p registers
  std::vector<int> rets;  // RET_FUN_f_r registers
  int lock = -1;          // LOCK_FUN_f mutex
  int exc = -1;           // EXC_FUN_f register, if the function can raise
  int process = -1;
  bool can_raise = false;
};

struct TypedModule {
  std::string name;
  std::vector<Object> objects;
  std::vector<TProcess> processes;
  std::vector<TFunction> functions;
  std::vector<std::string> exceptions;  // id = index + 1
  int64_t clock_hz = 1'000'000;
  std::vector<Diagnostic> notes;

  const Object& obj(int id) const { return objects.at(static_cast<size_t>(id)); }
  int find_object(const std::string& name) const;
  int find_process(const std::string& name) const;
  int main_process() const { return find_process("main"); }
};

// ---------------------------------------------------------------- helpers

/// Argument, result and exception registers of shared functions. They are
/// only accessed while the function lock is held and need no guard.
bool function_interface(const TypedModule& m, int obj);

/// Source-like infix text, e.g. `a + b + c`; names resolved through `m`.
std::string expr_text(const TypedModule& m, const TExpr& e);
std::string lhs_text(const TypedModule& m, const TLhs& l);
std::string stmt_text(const TypedModule& m, const TStmt& s, int indent = 0);
std::string block_text(const TypedModule& m, const TBlock& b, int indent = 0);

/// Calls `f` on every expression node (pre-order), including indices of
/// assignment targets.
void visit_exprs(const TExpr& e, const std::function<void(const TExpr&)>& f);
void visit_block_exprs(const TBlock& b, const std::function<void(const TExpr&)>& f);
void visit_stmts(const TBlock& b, const std::function<void(const TStmt&)>& f);

/// Objects read anywhere in the block (including loop bounds and indices).
void collect_reads(const TBlock& b, std::vector<int>& out);
void collect_expr_reads(const TExpr& e, std::vector<int>& out);
/// Objects written anywhere in the block.
void collect_writes(const TBlock& b, std::vector<int>& out);

}  // namespace hls

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hls/diag.hpp"
#include "hls/types.hpp"

namespace hls::ast {

struct Expr;
struct Stmt;
struct Decl;
using ExprP = std::shared_ptr<const Expr>;
using StmtP = std::shared_ptr<const Stmt>;
using DeclP = std::shared_ptr<const Decl>;

/// `with name=value and flag`. A null value marks a bare flag.
struct Param {
  std::string name;  // may be qualified: Semaphore.depth
  ExprP value;
  SourceLoc loc;
};
using Params = std::vector<Param>;

enum class ExprKind {
  Int,
  Logic,
  Char,
  String,
  Bool,
  Ident,
  Hash,     // process-array self index
  Index,    // a.[i]        args: base, indices...
  Member,   // a.name       args: base
  Bit,      // a[i]         args: base, index
  Range,    // a[i to j]    args: base, i, j
  Unary,    // args: operand
  Binary,   // args: lhs, rhs
  Convert,  // to_int(x)    name: to_int ...
  Call,     // f(args)
  Time,     // 500 millisec  args: value; name: unit
};

struct Expr {
  ExprKind kind = ExprKind::Int;
  SourceLoc loc;
  int64_t value = 0;
  int width = 0;
  bool downto = false;
  Op op = Op::Add;
  std::string name;
  std::vector<ExprP> args;
};

struct TypeSpec {
  std::string name;  // int, logic, bool, char, value, or a user type
  ExprP width;       // optional
  SourceLoc loc;
};

struct Choice {
  ExprP lo;
  ExprP hi;  // set for ranges
  bool downto = false;
};

struct MatchArm {
  std::vector<Choice> choices;
  bool others = false;
  StmtP body;
  SourceLoc loc;
};

struct Handler {
  std::vector<std::string> names;
  bool others = false;
  StmtP body;
  SourceLoc loc;
};

enum class StmtKind {
  Assign,  // lhs (1 or tuple), rhs
  Bind,    // body: assignments executed in one step
  Block,
  If,
  Match,
  Try,
  Raise,
  For,
  While,
  Always,
  Wait,    // wait for expr [with s1 [else s0]]
  Method,  // target.method(args)
  Call,    // procedure call
  Map,     // component mapping stub: a << b
};

struct Stmt {
  StmtKind kind = StmtKind::Block;
  SourceLoc loc;
  std::vector<ExprP> lhs;
  ExprP expr;  // rhs, condition, match subject, wait expr, method target, loop start
  ExprP expr2;  // loop end
  ExprP step;
  bool downto = false;
  std::string name;  // method, callee, loop variable, raised exception
  std::vector<ExprP> args;
  std::vector<StmtP> body;  // block / bind contents
  StmtP then_s, else_s;     // if, loops (then_s is the body), wait with/else
  std::vector<MatchArm> arms;
  std::vector<Handler> handlers;
  Params params;
};

enum class ObjClass { Reg, Var, Sig, Const, Queue, Channel };

enum class DeclKind {
  Open,
  Object,     // reg/var/sig/const/queue/channel
  RamBlock,   // block B
  Abstract,   // object o: mutex ...
  Array,
  Type,
  Component,
  Export,
  Exception,
  Process,
  Function,
  TopStmt,
};

enum class ArrayClass { Reg, Var, Sig, Queue, Channel, Object, Process };
enum class TypeClass { Struct, BitStruct, Enum, Port };

struct Field {
  std::string name;
  TypeSpec type;  // struct / port fields
  ExprP lo, hi;   // bit-struct: width only (lo), or range lo..hi
  bool downto = false;
  std::string dir;  // port fields
  SourceLoc loc;
};

struct Formal {
  std::string name;
  bool typed = false;
  TypeSpec type;
  SourceLoc loc;
};

struct Body {
  std::vector<DeclP> decls;
  std::vector<StmtP> stmts;
};

struct Decl {
  DeclKind kind = DeclKind::Open;
  SourceLoc loc;
  std::vector<std::string> names;
  ObjClass obj = ObjClass::Reg;
  ArrayClass arr = ArrayClass::Reg;
  TypeClass tclass = TypeClass::Struct;
  TypeSpec type;
  std::string type_name;  // abstract object type, component type
  std::string block;      // var ... in B
  ExprP init;             // const value
  std::vector<ExprP> sizes;
  std::vector<Field> fields;
  std::vector<Formal> formals, returns;
  Body body;
  StmtP stmt;  // TopStmt
  Params params;
};

struct Module {
  std::string name;
  std::vector<DeclP> decls;
};

// Structural equality ignoring source locations.
bool equal(const Expr& a, const Expr& b);
bool equal(const Stmt& a, const Stmt& b);
bool equal(const Decl& a, const Decl& b);
bool equal(const Module& a, const Module& b);

/// Parameter lookup helpers; names compare case-sensitively, and a qualified
/// name `T.p` also matches a lookup for `p`.
const Param* find_param(const Params& ps, const std::string& name);
bool has_flag(const Params& ps, const std::string& name);

}  // namespace hls::ast

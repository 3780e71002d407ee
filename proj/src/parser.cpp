#include "hls/parser.hpp"

#include <initializer_list>
#include <optional>
#include <sstream>

namespace hls {

using namespace ast;

namespace {

bool is_time_unit(const std::string& s) {
  return s == "nanosec" || s == "microsec" || s == "millisec" || s == "sec" || s == "hz" ||
         s == "kilohz" || s == "megahz" || s == "gigahz";
}

bool is_conversion(const std::string& s) {
  return s == "to_int" || s == "to_logic" || s == "to_char" || s == "to_bool";
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case TokKind::End: return "end of input";
    case TokKind::Ident: return "identifier '" + t.text + "'";
    case TokKind::Int:
    case TokKind::Logic: return "number '" + t.text + "'";
    case TokKind::Char: return "character " + t.text;
    case TokKind::String: return "string " + t.text;
    default: return "'" + t.text + "'";
  }
}

class Parser {
 public:
  Parser(const std::vector<Token>& toks, DiagSink& diags) : toks_(toks), diags_(diags) {}

  Module module(std::string name) {
    Module m;
    m.name = std::move(name);
    while (!at_end()) parse_toplevel(m.decls);
    return m;
  }

  ExprP expression_only() {
    auto e = expr();
    if (!at_end()) error_expected({"end of expression"});
    return e;
  }

 private:
  const std::vector<Token>& toks_;
  DiagSink& diags_;
  size_t pos_ = 0;

  const Token& peek(size_t k = 0) const {
    size_t i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == TokKind::End; }

  [[noreturn]] void error_expected(std::initializer_list<std::string_view> what) {
    std::string msg = "syntax error: expected ";
    size_t n = what.size();
    size_t i = 0;
    if (n > 1) msg += "one of ";
    for (auto w : what) {
      if (i++) msg += ", ";
      msg += w;
    }
    msg += ", found " + describe(peek());
    fail(diags_, peek().loc, msg);
  }

  bool accept_kw(std::string_view k) {
    if (peek().is_kw(k)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_punct(std::string_view p) {
    if (peek().is_punct(p)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_op(std::string_view p) {
    if (peek().is_op(p)) {
      next();
      return true;
    }
    return false;
  }
  void expect_kw(std::string_view k) {
    if (!accept_kw(k)) error_expected({"'" + std::string(k) + "'"});
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) error_expected({"'" + std::string(p) + "'"});
  }
  void expect_op(std::string_view p) {
    if (!accept_op(p)) error_expected({"'" + std::string(p) + "'"});
  }
  std::string expect_ident() {
    if (peek().kind != TokKind::Ident) error_expected({"identifier"});
    return next().text;
  }
  std::vector<std::string> ident_list() {
    std::vector<std::string> names{expect_ident()};
    while (accept_punct(",")) names.push_back(expect_ident());
    return names;
  }

  // ---------------------------------------------------------------- params

  Params opt_params() {
    Params ps;
    // `with begin` opens an exception handler list, not parameters
    if (!peek().is_kw("with") || peek(1).is_kw("begin")) return ps;
    next();
    do {
      Param p;
      p.loc = peek().loc;
      if (peek().kind != TokKind::Ident && peek().kind != TokKind::Keyword)
        error_expected({"parameter name"});
      p.name = next().text;
      while (peek().is_punct(".") &&
             (peek(1).kind == TokKind::Ident || peek(1).kind == TokKind::Keyword)) {
        next();
        p.name += "." + next().text;
      }
      if (accept_op("=")) p.value = concat_expr();
      ps.push_back(std::move(p));
    } while (accept_kw("and"));
    return ps;
  }

  // ------------------------------------------------------------- top level

  void parse_toplevel(std::vector<DeclP>& out) {
    const Token& t = peek();
    if (t.is_kw("module")) {
      fail(diags_, t.loc, "structural module definitions are out of scope");
    }
    if (t.is_kw("include")) {
      fail(diags_, t.loc, "include must be resolved before parsing");
    }
    if (t.is_kw("process")) {
      out.push_back(process_decl());
      return;
    }
    if (t.is_kw("function")) {
      out.push_back(function_decl());
      return;
    }
    if (try_decl(out, /*top=*/true)) return;
    auto d = std::make_shared<Decl>();
    d->kind = DeclKind::TopStmt;
    d->loc = t.loc;
    d->stmt = statement();
    expect_punct(";");
    out.push_back(d);
  }

  /// Object, type and other definitions; returns false if the next token does
  /// not start one.
  bool try_decl(std::vector<DeclP>& out, bool top) {
    const Token& t = peek();
    SourceLoc loc = t.loc;
    auto d = std::make_shared<Decl>();
    d->loc = loc;
    if (t.is_kw("open")) {
      next();
      d->kind = DeclKind::Open;
      std::string n = expect_ident();
      while (accept_punct(".")) n += "." + expect_ident();
      d->names.push_back(n);
      expect_punct(";");
    } else if (t.is_kw("reg") || t.is_kw("var") || t.is_kw("sig") || t.is_kw("queue") ||
               t.is_kw("channel")) {
      std::string k = next().text;
      d->kind = DeclKind::Object;
      d->obj = k == "reg"     ? ObjClass::Reg
               : k == "var"   ? ObjClass::Var
               : k == "sig"   ? ObjClass::Sig
               : k == "queue" ? ObjClass::Queue
                              : ObjClass::Channel;
      d->names = ident_list();
      expect_punct(":");
      d->type = type_spec();
      if (d->obj == ObjClass::Var && accept_kw("in")) d->block = expect_ident();
      d->params = opt_params();
      expect_punct(";");
    } else if (t.is_kw("const")) {
      next();
      d->kind = DeclKind::Object;
      d->obj = ObjClass::Const;
      d->names = ident_list();
      expect_punct(":");
      d->type = type_spec();
      expect_op(":=");
      d->init = expr();
      expect_punct(";");
    } else if (t.is_kw("block")) {
      next();
      d->kind = DeclKind::RamBlock;
      d->names = ident_list();
      d->params = opt_params();
      expect_punct(";");
    } else if (t.is_kw("object")) {
      next();
      d->kind = DeclKind::Abstract;
      d->names = ident_list();
      expect_punct(":");
      d->type_name = expect_ident();
      d->params = opt_params();
      expect_punct(";");
    } else if (t.is_kw("array")) {
      next();
      array_decl(*d);
    } else if (t.is_kw("type")) {
      next();
      type_decl(*d);
    } else if (t.is_kw("component")) {
      next();
      d->kind = DeclKind::Component;
      d->names = ident_list();
      expect_punct(":");
      d->type_name = expect_ident();
      d->params = opt_params();
      expect_punct(";");
    } else if (t.is_kw("export")) {
      next();
      d->kind = DeclKind::Export;
      d->names = ident_list();
      expect_punct(";");
    } else if (t.is_kw("exception")) {
      next();
      d->kind = DeclKind::Exception;
      d->names = ident_list();
      expect_punct(";");
    } else {
      return false;
    }
    (void)top;
    out.push_back(d);
    return true;
  }

  TypeSpec type_spec() {
    TypeSpec ts;
    ts.loc = peek().loc;
    const Token& t = peek();
    if (t.is_kw("int") || t.is_kw("logic") || t.is_kw("bool") || t.is_kw("char") ||
        t.is_kw("value")) {
      ts.name = next().text;
    } else if (t.kind == TokKind::Ident) {
      ts.name = next().text;
    } else {
      error_expected({"data type"});
    }
    if ((ts.name == "int" || ts.name == "logic") && accept_punct("[")) {
      ts.width = expr();
      expect_punct("]");
    }
    return ts;
  }

  void array_decl(Decl& d) {
    d.kind = DeclKind::Array;
    d.names = ident_list();
    expect_punct(":");
    const Token& t = peek();
    if (t.is_kw("object")) {
      next();
      d.arr = ArrayClass::Object;
      d.type_name = expect_ident();
      expect_punct("[");
      d.sizes = expr_list("]");
      d.params = opt_params();
      expect_punct(";");
      return;
    }
    if (t.is_kw("process")) {
      next();
      d.arr = ArrayClass::Process;
      expect_punct("[");
      d.sizes = expr_list("]");
      accept_kw("of");
      d.body = body();
      d.params = opt_params();
      expect_punct(";");
      return;
    }
    if (t.is_kw("reg")) d.arr = ArrayClass::Reg;
    else if (t.is_kw("var")) d.arr = ArrayClass::Var;
    else if (t.is_kw("sig")) d.arr = ArrayClass::Sig;
    else if (t.is_kw("queue")) d.arr = ArrayClass::Queue;
    else if (t.is_kw("channel")) d.arr = ArrayClass::Channel;
    else error_expected({"'reg'", "'var'", "'sig'", "'queue'", "'channel'", "'object'", "'process'"});
    next();
    expect_punct("[");
    d.sizes = expr_list("]");
    expect_kw("of");
    d.type = type_spec();
    if (d.arr == ArrayClass::Var && accept_kw("in")) d.block = expect_ident();
    d.params = opt_params();
    expect_punct(";");
  }

  void type_decl(Decl& d) {
    d.kind = DeclKind::Type;
    d.names.push_back(expect_ident());
    expect_punct(":");
    expect_punct("{");
    bool first = true;
    while (!peek().is_punct("}")) {
      Field f;
      f.loc = peek().loc;
      TypeClass cls;
      if (accept_kw("port")) {
        cls = TypeClass::Port;
        f.name = expect_ident();
        expect_punct(":");
        if (peek().is_kw("input") || peek().is_kw("output") || peek().is_kw("inout"))
          f.dir = next().text;
        else
          error_expected({"'input'", "'output'", "'inout'"});
        f.type = type_spec();
      } else {
        f.name = expect_ident();
        if (accept_punct(":")) {
          if (peek().kind == TokKind::Int || peek().kind == TokKind::Ident ||
              peek().kind == TokKind::Op || peek().is_punct("(")) {
            cls = TypeClass::BitStruct;
            f.lo = expr();
            if (accept_kw("to")) {
              f.hi = expr();
            } else if (accept_kw("downto")) {
              f.hi = expr();
              f.downto = true;
            }
          } else {
            cls = TypeClass::Struct;
            f.type = type_spec();
          }
        } else {
          cls = TypeClass::Enum;
        }
      }
      if (first) {
        d.tclass = cls;
        first = false;
      } else if (cls != d.tclass) {
        fail(diags_, f.loc, "mixed element kinds in type definition");
      }
      d.fields.push_back(std::move(f));
      if (!accept_punct(";") && !accept_punct(",")) {
        if (!peek().is_punct("}")) error_expected({"';'", "'}'"});
      }
    }
    expect_punct("}");
    if (first) fail(diags_, d.loc, "empty type definition");
    d.params = opt_params();
    expect_punct(";");
  }

  Body body() {
    Body b;
    expect_kw("begin");
    while (!peek().is_kw("end")) {
      if (at_end()) error_expected({"'end'"});
      if (try_decl(b.decls, false)) continue;
      b.stmts.push_back(statement());
      expect_punct(";");
    }
    expect_kw("end");
    return b;
  }

  DeclP process_decl() {
    auto d = std::make_shared<Decl>();
    d->loc = peek().loc;
    expect_kw("process");
    d->kind = DeclKind::Process;
    d->names.push_back(expect_ident());
    accept_punct(":");
    d->body = body();
    d->params = opt_params();
    expect_punct(";");
    return d;
  }

  std::vector<Formal> formals() {
    std::vector<Formal> fs;
    expect_punct("(");
    if (accept_punct(")")) return fs;
    do {
      Formal f;
      f.loc = peek().loc;
      f.name = expect_ident();
      if (accept_punct(":")) {
        f.typed = true;
        f.type = type_spec();
      }
      fs.push_back(std::move(f));
    } while (accept_punct(","));
    expect_punct(")");
    return fs;
  }

  DeclP function_decl() {
    auto d = std::make_shared<Decl>();
    d->loc = peek().loc;
    expect_kw("function");
    d->kind = DeclKind::Function;
    d->names.push_back(expect_ident());
    if (peek().is_punct("(")) d->formals = formals();
    if (accept_kw("return")) d->returns = formals();
    expect_punct(":");
    d->body = body();
    d->params = opt_params();
    expect_punct(";");
    return d;
  }

  // ------------------------------------------------------------ statements

  StmtP statement() {
    const Token& t = peek();
    SourceLoc loc = t.loc;
    auto s = std::make_shared<Stmt>();
    s->loc = loc;
    if (t.is_kw("begin")) {
      next();
      s->kind = StmtKind::Block;
      while (!peek().is_kw("end")) {
        if (at_end()) error_expected({"'end'"});
        s->body.push_back(statement());
        expect_punct(";");
      }
      expect_kw("end");
      s->params = opt_params();
      if (has_flag(s->params, "bind")) {
        for (const auto& b : s->body)
          if (b->kind != StmtKind::Assign)
            fail(diags_, b->loc, "a bound block may only contain assignments");
      }
      return s;
    }
    if (t.is_kw("if")) {
      next();
      s->kind = StmtKind::If;
      s->expr = expr();
      expect_kw("then");
      s->then_s = statement();
      if (accept_kw("else")) s->else_s = statement();
      return s;
    }
    if (t.is_kw("match")) {
      next();
      s->kind = StmtKind::Match;
      s->expr = expr();
      expect_kw("with");
      expect_kw("begin");
      bool seen_others = false;
      while (!peek().is_kw("end")) {
        MatchArm arm;
        arm.loc = peek().loc;
        if (seen_others) fail(diags_, arm.loc, "'others' must be the last match arm");
        if (accept_kw("others")) {
          arm.others = true;
          seen_others = true;
        } else {
          expect_kw("when");
          if (accept_kw("others")) {
            arm.others = true;
            seen_others = true;
          } else {
            do {
              Choice c;
              c.lo = concat_expr();
              if (accept_kw("to")) {
                c.hi = concat_expr();
              } else if (accept_kw("downto")) {
                c.hi = concat_expr();
                c.downto = true;
              }
              arm.choices.push_back(std::move(c));
            } while (accept_punct(","));
          }
        }
        expect_punct(":");
        arm.body = statement();
        expect_punct(";");
        s->arms.push_back(std::move(arm));
      }
      expect_kw("end");
      if (s->arms.empty()) fail(diags_, loc, "match statement without arms");
      return s;
    }
    if (t.is_kw("try")) {
      next();
      s->kind = StmtKind::Try;
      s->then_s = statement();
      accept_punct(";");
      expect_kw("with");
      expect_kw("begin");
      bool seen_others = false;
      while (!peek().is_kw("end")) {
        Handler h;
        h.loc = peek().loc;
        if (seen_others) fail(diags_, h.loc, "'others' must be the last handler");
        if (accept_kw("others")) {
          h.others = true;
          seen_others = true;
        } else {
          expect_kw("when");
          if (accept_kw("others")) {
            h.others = true;
            seen_others = true;
          } else {
            h.names = ident_list();
          }
        }
        expect_punct(":");
        h.body = statement();
        expect_punct(";");
        s->handlers.push_back(std::move(h));
      }
      expect_kw("end");
      if (s->handlers.empty()) fail(diags_, loc, "try statement without handlers");
      return s;
    }
    if (t.is_kw("raise")) {
      next();
      s->kind = StmtKind::Raise;
      s->name = expect_ident();
      return s;
    }
    if (t.is_kw("for")) {
      next();
      s->kind = StmtKind::For;
      s->name = expect_ident();
      expect_op("=");
      s->expr = expr();
      if (accept_kw("downto")) {
        s->downto = true;
      } else {
        expect_kw("to");
      }
      s->expr2 = expr();
      if (accept_kw("step")) s->step = expr();
      expect_kw("do");
      s->then_s = statement();
      return s;
    }
    if (t.is_kw("while")) {
      next();
      s->kind = StmtKind::While;
      s->expr = expr();
      expect_kw("do");
      s->then_s = statement();
      return s;
    }
    if (t.is_kw("always")) {
      next();
      s->kind = StmtKind::Always;
      expect_kw("do");
      s->then_s = statement();
      return s;
    }
    if (t.is_kw("wait")) {
      next();
      s->kind = StmtKind::Wait;
      expect_kw("for");
      s->expr = expr();
      if (accept_kw("with")) {
        s->then_s = statement();
        if (peek().is_punct(";") && peek(1).is_kw("else")) next();
        if (accept_kw("else")) s->else_s = statement();
      }
      return s;
    }
    if (t.is_punct("{")) {
      next();
      s->kind = StmtKind::Assign;
      do {
        s->lhs.push_back(postfix_expr());
      } while (accept_punct(","));
      expect_punct("}");
      expect_op("<-");
      s->expr = expr();
      return s;
    }
    if (t.kind == TokKind::Ident) {
      ExprP target = postfix_expr();
      if (target->kind == ExprKind::Member && peek().is_punct("(")) {
        next();
        s->kind = StmtKind::Method;
        s->name = target->name;
        s->expr = target->args[0];
        if (!peek().is_punct(")")) s->args = expr_list(")");
        else next();
        return s;
      }
      if (target->kind == ExprKind::Call) {
        s->kind = StmtKind::Call;
        s->name = target->name;
        s->args = target->args;
        return s;
      }
      if (accept_op("<<")) {
        s->kind = StmtKind::Map;
        s->lhs.push_back(target);
        s->expr = expr();
        return s;
      }
      if (!peek().is_op("<-")) error_expected({"'<-'", "'('", "'<<'"});
      check_lvalue(*target);
      next();
      auto first = std::make_shared<Stmt>();
      first->kind = StmtKind::Assign;
      first->loc = loc;
      first->lhs.push_back(target);
      first->expr = expr();
      if (!peek().is_punct(",")) return first;
      s->kind = StmtKind::Bind;
      s->body.push_back(first);
      while (accept_punct(",")) {
        auto a = std::make_shared<Stmt>();
        a->kind = StmtKind::Assign;
        a->loc = peek().loc;
        ExprP lhs = postfix_expr();
        check_lvalue(*lhs);
        a->lhs.push_back(lhs);
        expect_op("<-");
        a->expr = expr();
        s->body.push_back(a);
      }
      return s;
    }
    error_expected({"statement"});
  }

  void check_lvalue(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Ident:
      case ExprKind::Index:
      case ExprKind::Member:
      case ExprKind::Bit:
      case ExprKind::Range: return;
      default: fail(diags_, e.loc, "invalid assignment target");
    }
  }

  // ----------------------------------------------------------- expressions

  std::vector<ExprP> expr_list(std::string_view close) {
    std::vector<ExprP> xs;
    do {
      xs.push_back(expr());
    } while (accept_punct(","));
    expect_punct(close);
    return xs;
  }

  ExprP make_binary(Op op, SourceLoc loc, ExprP a, ExprP b) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::Binary;
    e->loc = loc;
    e->op = op;
    e->args = {std::move(a), std::move(b)};
    return e;
  }

  ExprP expr() { return bool_expr(); }

  template <typename Next>
  ExprP binary_level(std::initializer_list<std::pair<std::string_view, Op>> ops, bool keyword,
                     Next next_level) {
    ExprP lhs = (this->*next_level)();
    for (;;) {
      const Token& t = peek();
      bool found = false;
      for (auto [text, op] : ops) {
        bool hit = keyword ? t.is_kw(text) : t.is_op(text);
        if (hit) {
          SourceLoc loc = t.loc;
          next();
          ExprP rhs = (this->*next_level)();
          lhs = make_binary(op, loc, lhs, rhs);
          found = true;
          break;
        }
      }
      if (!found) return lhs;
    }
  }

  ExprP bool_expr() {
    return binary_level({{"and", Op::And}, {"or", Op::Or}, {"xor", Op::Xor}}, true,
                        &Parser::bitwise_expr);
  }
  ExprP bitwise_expr() {
    return binary_level({{"land", Op::Land}, {"lor", Op::Lor}, {"lxor", Op::Lxor}}, true,
                        &Parser::rel_expr);
  }
  ExprP rel_expr() {
    return binary_level({{"<=", Op::Le},
                         {">=", Op::Ge},
                         {"<>", Op::Ne},
                         {"<", Op::Lt},
                         {">", Op::Gt},
                         {"=", Op::Eq}},
                        false, &Parser::concat_expr);
  }
  ExprP concat_expr() { return binary_level({{"@", Op::Concat}}, false, &Parser::shift_expr); }
  ExprP shift_expr() {
    return binary_level({{"lsl", Op::Lsl}, {"lsr", Op::Lsr}}, true, &Parser::add_expr);
  }
  ExprP add_expr() {
    return binary_level({{"+", Op::Add}, {"-", Op::Sub}}, false, &Parser::mul_expr);
  }
  ExprP mul_expr() {
    return binary_level({{"*", Op::Mul}, {"/", Op::Div}, {"%", Op::Mod}, {"~", Op::Log}}, false,
                        &Parser::unary_expr);
  }

  ExprP unary_expr() {
    const Token& t = peek();
    SourceLoc loc = t.loc;
    std::optional<Op> op;
    if (t.is_op("-")) op = Op::Neg;
    else if (t.is_kw("not")) op = Op::Not;
    else if (t.is_kw("lnot")) op = Op::Lnot;
    if (op) {
      next();
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Unary;
      e->loc = loc;
      e->op = *op;
      e->args.push_back(unary_expr());
      return e;
    }
    if (t.kind == TokKind::Keyword && is_conversion(t.text)) {
      next();
      auto e = std::make_shared<Expr>();
      e->kind = ExprKind::Convert;
      e->loc = loc;
      e->name = t.text;
      expect_punct("(");
      e->args.push_back(expr());
      expect_punct(")");
      return e;
    }
    return postfix_expr();
  }

  ExprP postfix_expr() {
    ExprP e = primary();
    for (;;) {
      const Token& t = peek();
      if (t.is_punct(".") && peek(1).is_punct("[")) {
        SourceLoc loc = t.loc;
        next();
        next();
        auto x = std::make_shared<Expr>();
        x->kind = ExprKind::Index;
        x->loc = loc;
        x->args.push_back(e);
        for (auto& i : expr_list("]")) x->args.push_back(i);
        e = x;
        continue;
      }
      if (t.is_punct(".") && (peek(1).kind == TokKind::Ident)) {
        SourceLoc loc = t.loc;
        next();
        auto x = std::make_shared<Expr>();
        x->kind = ExprKind::Member;
        x->loc = loc;
        x->name = next().text;
        x->args.push_back(e);
        e = x;
        if (peek().is_punct("(")) return e;  // method call, handled by the statement parser
        continue;
      }
      if (t.is_punct("[")) {
        SourceLoc loc = t.loc;
        next();
        auto x = std::make_shared<Expr>();
        x->loc = loc;
        x->args.push_back(e);
        x->args.push_back(expr());
        if (accept_kw("to")) {
          x->kind = ExprKind::Range;
          x->args.push_back(expr());
        } else if (accept_kw("downto")) {
          x->kind = ExprKind::Range;
          x->downto = true;
          x->args.push_back(expr());
        } else {
          x->kind = ExprKind::Bit;
        }
        expect_punct("]");
        e = x;
        continue;
      }
      return e;
    }
  }

  ExprP primary() {
    const Token& t = peek();
    auto e = std::make_shared<Expr>();
    e->loc = t.loc;
    switch (t.kind) {
      case TokKind::Int:
      case TokKind::Logic: {
        e->kind = t.kind == TokKind::Int ? ExprKind::Int : ExprKind::Logic;
        e->value = t.value;
        e->width = t.width;
        next();
        if (peek().kind == TokKind::Keyword && is_time_unit(peek().text)) {
          auto tv = std::make_shared<Expr>();
          tv->kind = ExprKind::Time;
          tv->loc = e->loc;
          tv->name = next().text;
          tv->args.push_back(e);
          return tv;
        }
        return e;
      }
      case TokKind::Char:
        e->kind = ExprKind::Char;
        e->value = t.value;
        next();
        return e;
      case TokKind::String:
        e->kind = ExprKind::String;
        e->name = string_value(t);
        next();
        return e;
      case TokKind::Ident:
        e->kind = ExprKind::Ident;
        e->name = t.text;
        next();
        if (peek().is_punct("(")) {
          next();
          e->kind = ExprKind::Call;
          if (!accept_punct(")")) e->args = expr_list(")");
        }
        return e;
      default: break;
    }
    if (t.is_kw("true") || t.is_kw("false")) {
      e->kind = ExprKind::Bool;
      e->value = t.is_kw("true") ? 1 : 0;
      next();
      return e;
    }
    if (t.is_op("#")) {
      e->kind = ExprKind::Hash;
      next();
      return e;
    }
    if (t.is_punct("(")) {
      next();
      ExprP inner = expr();
      expect_punct(")");
      return inner;
    }
    error_expected({"expression"});
  }
};

// ---------------------------------------------------------------- printing

std::string params_text(const Params& ps) {
  if (ps.empty()) return "";
  std::string out = " with ";
  for (size_t i = 0; i < ps.size(); ++i) {
    if (i) out += " and ";
    out += ps[i].name;
    if (ps[i].value) out += "=" + print_expr(*ps[i].value);
  }
  return out;
}

std::string type_text(const TypeSpec& t) {
  std::string out = t.name;
  if (t.width) out += "[" + print_expr(*t.width) + "]";
  return out;
}

std::string join(const std::vector<std::string>& xs, const char* sep = ", ") {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

std::string pad(int n) { return std::string(static_cast<size_t>(n) * 2, ' '); }

std::string expr_list_text(const std::vector<ExprP>& xs, size_t from = 0) {
  std::string out;
  for (size_t i = from; i < xs.size(); ++i) {
    if (i > from) out += ",";
    out += print_expr(*xs[i]);
  }
  return out;
}

std::string body_text(const Body& b, int indent);

std::string decl_text(const Decl& d, int indent) {
  std::ostringstream os;
  os << pad(indent);
  switch (d.kind) {
    case DeclKind::Open: os << "open " << d.names[0] << ";"; break;
    case DeclKind::Object: {
      static const char* kinds[] = {"reg", "var", "sig", "const", "queue", "channel"};
      os << kinds[static_cast<int>(d.obj)] << " " << join(d.names) << ": " << type_text(d.type);
      if (d.obj == ObjClass::Const) os << " := " << print_expr(*d.init);
      if (!d.block.empty()) os << " in " << d.block;
      os << params_text(d.params) << ";";
      break;
    }
    case DeclKind::RamBlock: os << "block " << join(d.names) << params_text(d.params) << ";"; break;
    case DeclKind::Abstract:
      os << "object " << join(d.names) << ": " << d.type_name << params_text(d.params) << ";";
      break;
    case DeclKind::Array: {
      os << "array " << join(d.names) << ": ";
      std::string sizes = expr_list_text(d.sizes);
      switch (d.arr) {
        case ArrayClass::Object: os << "object " << d.type_name << "[" << sizes << "]"; break;
        case ArrayClass::Process:
          os << "process[" << sizes << "] of\n" << body_text(d.body, indent);
          break;
        default: {
          static const char* kinds[] = {"reg", "var", "sig", "queue", "channel"};
          os << kinds[static_cast<int>(d.arr)] << "[" << sizes << "] of " << type_text(d.type);
          if (!d.block.empty()) os << " in " << d.block;
        }
      }
      os << params_text(d.params) << ";";
      break;
    }
    case DeclKind::Type: {
      os << "type " << d.names[0] << ": {";
      for (size_t i = 0; i < d.fields.size(); ++i) {
        const auto& f = d.fields[i];
        os << (i ? " " : " ");
        switch (d.tclass) {
          case TypeClass::Port: os << "port " << f.name << ": " << f.dir << " " << type_text(f.type); break;
          case TypeClass::Struct: os << f.name << ": " << type_text(f.type); break;
          case TypeClass::BitStruct:
            os << f.name << ": " << print_expr(*f.lo);
            if (f.hi) os << (f.downto ? " downto " : " to ") << print_expr(*f.hi);
            break;
          case TypeClass::Enum: os << f.name; break;
        }
        os << ";";
      }
      os << " }" << params_text(d.params) << ";";
      break;
    }
    case DeclKind::Component:
      os << "component " << join(d.names) << ": " << d.type_name << params_text(d.params) << ";";
      break;
    case DeclKind::Export: os << "export " << join(d.names) << ";"; break;
    case DeclKind::Exception: os << "exception " << join(d.names) << ";"; break;
    case DeclKind::Process:
      os << "process " << d.names[0] << ":\n" << body_text(d.body, indent) << params_text(d.params)
         << ";";
      break;
    case DeclKind::Function: {
      auto formal_text = [](const std::vector<Formal>& fs) {
        std::vector<std::string> parts;
        for (const auto& f : fs) parts.push_back(f.typed ? f.name + ": " + type_text(f.type) : f.name);
        return "(" + join(parts) + ")";
      };
      os << "function " << d.names[0] << formal_text(d.formals);
      if (!d.returns.empty()) os << " return " << formal_text(d.returns);
      os << ":\n" << body_text(d.body, indent) << params_text(d.params) << ";";
      break;
    }
    case DeclKind::TopStmt: return print_stmt(*d.stmt, indent) + ";";
  }
  return os.str();
}

std::string body_text(const Body& b, int indent) {
  std::string out = pad(indent) + "begin\n";
  for (const auto& d : b.decls) out += decl_text(*d, indent + 1) + "\n";
  for (const auto& s : b.stmts) out += print_stmt(*s, indent + 1) + ";\n";
  out += pad(indent) + "end";
  return out;
}

}  // namespace

ast::Module parse_module(const std::vector<Token>& tokens, DiagSink& diags, std::string name) {
  Parser p(tokens, diags);
  return p.module(std::move(name));
}

ast::Module parse_source(std::string_view source, DiagSink& diags, std::string name) {
  auto toks = tokenize(source, diags);
  return parse_module(toks, diags, std::move(name));
}

ast::ExprP parse_expression(std::string_view source, DiagSink& diags) {
  auto toks = tokenize(source, diags);
  Parser p(toks, diags);
  return p.expression_only();
}

std::string print_expr(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Int: return std::to_string(e.value);
    case ExprKind::Logic: {
      std::string bits;
      for (int i = e.width - 1; i >= 0; --i)
        bits += ((static_cast<uint64_t>(e.value) >> i) & 1u) ? '1' : '0';
      return "0b" + bits;
    }
    case ExprKind::Char: {
      char c = static_cast<char>(e.value);
      if (c == '\n') return "'\\n'";
      if (c == '\t') return "'\\t'";
      if (c == '\\' || c == '\'') return std::string("'\\") + c + "'";
      return std::string("'") + c + "'";
    }
    case ExprKind::String: {
      std::string out = "\"";
      for (char c : e.name) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        out += c;
      }
      return out + "\"";
    }
    case ExprKind::Bool: return e.value ? "true" : "false";
    case ExprKind::Ident: return e.name;
    case ExprKind::Hash: return "#";
    case ExprKind::Index: return print_expr(*e.args[0]) + ".[" + expr_list_text(e.args, 1) + "]";
    case ExprKind::Member: return print_expr(*e.args[0]) + "." + e.name;
    case ExprKind::Bit: return print_expr(*e.args[0]) + "[" + print_expr(*e.args[1]) + "]";
    case ExprKind::Range:
      return print_expr(*e.args[0]) + "[" + print_expr(*e.args[1]) +
             (e.downto ? " downto " : " to ") + print_expr(*e.args[2]) + "]";
    case ExprKind::Unary: {
      std::string op(op_text(e.op));
      return "(" + op + (op == "-" ? "" : " ") + print_expr(*e.args[0]) + ")";
    }
    case ExprKind::Binary:
      return "(" + print_expr(*e.args[0]) + " " + std::string(op_text(e.op)) + " " +
             print_expr(*e.args[1]) + ")";
    case ExprKind::Convert: return e.name + "(" + print_expr(*e.args[0]) + ")";
    case ExprKind::Call: return e.name + "(" + expr_list_text(e.args) + ")";
    case ExprKind::Time: return print_expr(*e.args[0]) + " " + e.name;
  }
  return "?";
}

std::string print_stmt(const Stmt& s, int indent) {
  std::ostringstream os;
  os << pad(indent);
  auto sub = [&](const StmtP& st) { return print_stmt(*st, indent + 1); };
  switch (s.kind) {
    case StmtKind::Assign:
      if (s.lhs.size() == 1)
        os << print_expr(*s.lhs[0]);
      else
        os << "{" << expr_list_text(s.lhs) << "}";
      os << " <- " << print_expr(*s.expr);
      break;
    case StmtKind::Bind:
      for (size_t i = 0; i < s.body.size(); ++i) {
        if (i) os << ", ";
        os << print_stmt(*s.body[i], 0);
      }
      break;
    case StmtKind::Block:
      os << "begin\n";
      for (const auto& b : s.body) os << sub(b) << ";\n";
      os << pad(indent) << "end" << params_text(s.params);
      break;
    case StmtKind::If:
      os << "if " << print_expr(*s.expr) << " then\n" << sub(s.then_s);
      if (s.else_s) os << "\n" << pad(indent) << "else\n" << sub(s.else_s);
      break;
    case StmtKind::Match:
      os << "match " << print_expr(*s.expr) << " with\n" << pad(indent) << "begin\n";
      for (const auto& a : s.arms) {
        os << pad(indent + 1);
        if (a.others) {
          os << "others";
        } else {
          os << "when ";
          for (size_t i = 0; i < a.choices.size(); ++i) {
            if (i) os << ", ";
            os << print_expr(*a.choices[i].lo);
            if (a.choices[i].hi)
              os << (a.choices[i].downto ? " downto " : " to ") << print_expr(*a.choices[i].hi);
          }
        }
        os << ":\n" << print_stmt(*a.body, indent + 2) << ";\n";
      }
      os << pad(indent) << "end";
      break;
    case StmtKind::Try:
      os << "try\n" << sub(s.then_s) << "\n" << pad(indent) << "with\n" << pad(indent) << "begin\n";
      for (const auto& h : s.handlers) {
        os << pad(indent + 1) << (h.others ? std::string("others") : "when " + join(h.names))
           << ":\n"
           << print_stmt(*h.body, indent + 2) << ";\n";
      }
      os << pad(indent) << "end";
      break;
    case StmtKind::Raise: os << "raise " << s.name; break;
    case StmtKind::For:
      os << "for " << s.name << " = " << print_expr(*s.expr) << (s.downto ? " downto " : " to ")
         << print_expr(*s.expr2);
      if (s.step) os << " step " << print_expr(*s.step);
      os << " do\n" << sub(s.then_s);
      break;
    case StmtKind::While: os << "while " << print_expr(*s.expr) << " do\n" << sub(s.then_s); break;
    case StmtKind::Always: os << "always do\n" << sub(s.then_s); break;
    case StmtKind::Wait:
      os << "wait for " << print_expr(*s.expr);
      if (s.then_s) os << " with\n" << sub(s.then_s);
      if (s.else_s) os << "\n" << pad(indent) << "else\n" << sub(s.else_s);
      break;
    case StmtKind::Method:
      os << print_expr(*s.expr) << "." << s.name << "(" << expr_list_text(s.args) << ")";
      break;
    case StmtKind::Call: os << s.name << "(" << expr_list_text(s.args) << ")"; break;
    case StmtKind::Map: os << print_expr(*s.lhs[0]) << " << " << print_expr(*s.expr); break;
  }
  return os.str();
}

std::string print_module(const Module& m) {
  std::string out;
  for (const auto& d : m.decls) out += decl_text(*d, 0) + "\n";
  return out;
}

}  // namespace hls

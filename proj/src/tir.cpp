#include "hls/tir.hpp"

#include <algorithm>
#include <sstream>

namespace hls {

std::string_view obj_kind_name(ObjKind k) {
  switch (k) {
    case ObjKind::Reg: return "register";
    case ObjKind::Var: return "variable";
    case ObjKind::Sig: return "signal";
    case ObjKind::Const: return "constant";
    case ObjKind::Queue: return "queue";
    case ObjKind::Channel: return "channel";
    case ObjKind::Mutex: return "mutex";
    case ObjKind::Semaphore: return "semaphore";
    case ObjKind::Event: return "event";
    case ObjKind::Barrier: return "barrier";
    case ObjKind::Timer: return "timer";
    case ObjKind::Process: return "process";
    case ObjKind::RamBlock: return "block";
    case ObjKind::Stub: return "object";
  }
  return "?";
}

TExprP make_const(DataType t, int64_t v) {
  auto e = std::make_shared<TExpr>();
  e->kind = TExprKind::Const;
  e->type = t;
  e->value = t.width > 0 ? wrap(t, v) : v;
  return e;
}

TExprP make_obj(int obj, DataType t) {
  auto e = std::make_shared<TExpr>();
  e->kind = TExprKind::Obj;
  e->type = t;
  e->obj = obj;
  return e;
}

TExprP make_elem(int obj, DataType t, TExprP index) {
  auto e = std::make_shared<TExpr>();
  e->kind = TExprKind::Elem;
  e->type = t;
  e->obj = obj;
  e->args.push_back(std::move(index));
  return e;
}

TExprP make_bits(TExprP base, int lo, int hi) {
  auto e = std::make_shared<TExpr>();
  e->kind = TExprKind::Bits;
  e->type = DataType::logic(hi - lo + 1);
  e->lo = lo;
  e->hi = hi;
  e->args.push_back(std::move(base));
  return e;
}

TExprP make_unary(Op op, DataType t, TExprP a) {
  auto e = std::make_shared<TExpr>();
  e->kind = TExprKind::Unary;
  e->type = t;
  e->op = op;
  e->args.push_back(std::move(a));
  return e;
}

TExprP make_binary(Op op, DataType t, TExprP a, TExprP b) {
  auto e = std::make_shared<TExpr>();
  e->kind = TExprKind::Binary;
  e->type = t;
  e->op = op;
  e->args.push_back(std::move(a));
  e->args.push_back(std::move(b));
  return e;
}

TExprP make_convert(DataType t, TExprP a) {
  if (a->type == t) return a;
  auto e = std::make_shared<TExpr>();
  e->kind = TExprKind::Convert;
  e->type = t;
  e->args.push_back(std::move(a));
  return e;
}

bool expr_equal(const TExpr& a, const TExpr& b) {
  if (a.kind != b.kind || !(a.type == b.type) || a.args.size() != b.args.size()) return false;
  switch (a.kind) {
    case TExprKind::Const:
      if (a.value != b.value) return false;
      break;
    case TExprKind::Obj:
    case TExprKind::Elem:
      if (a.obj != b.obj) return false;
      break;
    case TExprKind::Bits:
      if (a.lo != b.lo || a.hi != b.hi) return false;
      break;
    case TExprKind::Unary:
    case TExprKind::Binary:
      if (a.op != b.op) return false;
      break;
    case TExprKind::Convert: break;
  }
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(*a.args[i], *b.args[i])) return false;
  return true;
}

int expr_size(const TExpr& e) {
  int n = (e.kind == TExprKind::Unary || e.kind == TExprKind::Binary) ? 1 : 0;
  for (const auto& a : e.args) n += expr_size(*a);
  return n;
}

int TypedModule::find_object(const std::string& name) const {
  for (const auto& o : objects)
    if (o.name == name && o.global) return o.id;
  return -1;
}

int TypedModule::find_process(const std::string& name) const {
  for (size_t i = 0; i < processes.size(); ++i)
    if (processes[i].name == name) return static_cast<int>(i);
  return -1;
}

// ------------------------------------------------------------------ text

namespace {

int precedence(const TExpr& e) {
  if (e.kind == TExprKind::Unary) return 8;
  if (e.kind != TExprKind::Binary) return 9;
  switch (e.op) {
    case Op::Mul:
    case Op::Div:
    case Op::Mod:
    case Op::Log: return 7;
    case Op::Add:
    case Op::Sub: return 6;
    case Op::Lsl:
    case Op::Lsr: return 5;
    case Op::Concat: return 4;
    case Op::Land:
    case Op::Lor:
    case Op::Lxor: return 2;
    case Op::And:
    case Op::Or:
    case Op::Xor: return 1;
    default: return 3;  // relational
  }
}

std::string const_text(const TExpr& e) {
  if (e.type.base == BaseType::Bool) return e.value ? "true" : "false";
  if (e.type.base == BaseType::Char && e.value >= 32 && e.value < 127)
    return std::string("'") + static_cast<char>(e.value) + "'";
  return std::to_string(e.value);
}

std::string text(const TypedModule& m, const TExpr& e) {
  auto sub = [&](const TExpr& a, bool right) {
    std::string s = text(m, a);
    int pa = precedence(a), pe = precedence(e);
    if (pa < pe || (right && pa == pe && a.kind == TExprKind::Binary)) return "(" + s + ")";
    return s;
  };
  switch (e.kind) {
    case TExprKind::Const: return const_text(e);
    case TExprKind::Obj: return m.obj(e.obj).name;
    case TExprKind::Elem: return m.obj(e.obj).name + ".[" + text(m, *e.args[0]) + "]";
    case TExprKind::Bits: {
      std::string base = sub(*e.args[0], false);
      if (e.lo == e.hi) return base + "[" + std::to_string(e.lo) + "]";
      return base + "[" + std::to_string(e.hi) + " downto " + std::to_string(e.lo) + "]";
    }
    case TExprKind::Unary: {
      std::string op(op_text(e.op));
      return op + (op == "-" ? "" : " ") + sub(*e.args[0], false);
    }
    case TExprKind::Binary:
      return sub(*e.args[0], false) + " " + std::string(op_text(e.op)) + " " +
             sub(*e.args[1], true);
    case TExprKind::Convert: {
      const char* fn = "to_int";
      switch (e.type.base) {
        case BaseType::Int: fn = "to_int"; break;
        case BaseType::Logic: fn = "to_logic"; break;
        case BaseType::Bool: fn = "to_bool"; break;
        case BaseType::Char: fn = "to_char"; break;
      }
      return std::string(fn) + "[" + std::to_string(e.type.width) + "](" + text(m, *e.args[0]) +
             ")";
    }
  }
  return "?";
}

std::string pad(int n) { return std::string(static_cast<size_t>(n) * 2, ' '); }

}  // namespace

std::string expr_text(const TypedModule& m, const TExpr& e) { return text(m, e); }

std::string lhs_text(const TypedModule& m, const TLhs& l) {
  std::string s = m.obj(l.obj).name;
  if (l.index) s += ".[" + expr_text(m, *l.index) + "]";
  if (l.lo >= 0) {
    if (l.lo == l.hi)
      s += "[" + std::to_string(l.lo) + "]";
    else
      s += "[" + std::to_string(l.hi) + " downto " + std::to_string(l.lo) + "]";
  }
  return s;
}

std::string block_text(const TypedModule& m, const TBlock& b, int indent) {
  std::string out;
  for (const auto& s : b) out += stmt_text(m, *s, indent) + "\n";
  return out;
}

std::string stmt_text(const TypedModule& m, const TStmt& s, int indent) {
  std::ostringstream os;
  os << pad(indent);
  auto body = [&](const TBlock& b) {
    os << "begin\n" << block_text(m, b, indent + 1) << pad(indent) << "end";
  };
  switch (s.kind) {
    case TStmtKind::Assign: os << lhs_text(m, s.lhs) << " <- " << expr_text(m, *s.rhs) << ";"; break;
    case TStmtKind::Bind:
      for (size_t i = 0; i < s.body.size(); ++i) {
        if (i) os << ", ";
        os << lhs_text(m, s.body[i]->lhs) << " <- " << expr_text(m, *s.body[i]->rhs);
      }
      os << ";";
      break;
    case TStmtKind::If:
      os << "if " << expr_text(m, *s.cond) << " then ";
      body(s.body);
      if (!s.else_b.empty()) {
        os << " else ";
        body(s.else_b);
      }
      os << ";";
      break;
    case TStmtKind::Match:
      os << "match " << expr_text(m, *s.cond) << " with\n";
      for (const auto& a : s.arms) {
        os << pad(indent + 1);
        if (a.others) {
          os << "others: ";
        } else {
          os << "when ";
          for (size_t i = 0; i < a.choices.size(); ++i) {
            if (i) os << ", ";
            os << a.choices[i].lo;
            if (a.choices[i].hi != a.choices[i].lo) os << " to " << a.choices[i].hi;
          }
          os << ": ";
        }
        os << "begin\n" << block_text(m, a.body, indent + 2) << pad(indent + 1) << "end;\n";
      }
      os << pad(indent) << "end;";
      break;
    case TStmtKind::For:
      os << "for " << m.obj(s.loop_obj).name << " = " << expr_text(m, *s.from)
         << (s.downto ? " downto " : " to ") << expr_text(m, *s.to);
      if (s.step != 1) os << " step " << s.step;
      os << " do ";
      body(s.body);
      os << ";";
      break;
    case TStmtKind::While:
      os << "while " << expr_text(m, *s.cond) << " do ";
      body(s.body);
      os << ";";
      break;
    case TStmtKind::Always:
      os << "always do ";
      body(s.body);
      os << ";";
      break;
    case TStmtKind::Wait: os << "wait for " << s.cycles << ";"; break;
    case TStmtKind::WaitCond:
      os << "wait for " << expr_text(m, *s.cond);
      if (!s.body.empty()) {
        os << " with ";
        body(s.body);
      }
      if (!s.else_b.empty()) {
        os << " else ";
        body(s.else_b);
      }
      os << ";";
      break;
    case TStmtKind::Method: {
      os << m.obj(s.obj).name << "." << s.method << "(";
      for (size_t i = 0; i < s.args.size(); ++i) os << (i ? "," : "") << expr_text(m, *s.args[i]);
      os << ");";
      break;
    }
    case TStmtKind::Call: {
      if (!s.dsts.empty()) {
        if (s.dsts.size() > 1) os << "{";
        for (size_t i = 0; i < s.dsts.size(); ++i) os << (i ? "," : "") << lhs_text(m, s.dsts[i]);
        if (s.dsts.size() > 1) os << "}";
        os << " <- ";
      }
      os << m.functions.at(static_cast<size_t>(s.obj)).name << "(";
      for (size_t i = 0; i < s.args.size(); ++i) os << (i ? "," : "") << expr_text(m, *s.args[i]);
      os << ");";
      break;
    }
    case TStmtKind::Raise: os << "raise " << m.exceptions.at(static_cast<size_t>(s.exc - 1)) << ";"; break;
    case TStmtKind::Try:
      os << "try ";
      body(s.body);
      os << " with\n";
      for (const auto& h : s.handlers) {
        os << pad(indent + 1);
        if (h.others) {
          os << "others: ";
        } else {
          os << "when ";
          for (size_t i = 0; i < h.excs.size(); ++i)
            os << (i ? ", " : "") << m.exceptions.at(static_cast<size_t>(h.excs[i] - 1));
          os << ": ";
        }
        os << "begin\n" << block_text(m, h.body, indent + 2) << pad(indent + 1) << "end;\n";
      }
      os << pad(indent) << "end;";
      break;
  }
  return os.str();
}

// -------------------------------------------------------------- visitors

void visit_exprs(const TExpr& e, const std::function<void(const TExpr&)>& f) {
  f(e);
  for (const auto& a : e.args) visit_exprs(*a, f);
}

namespace {

void visit_lhs(const TLhs& l, const std::function<void(const TExpr&)>& f) {
  if (l.index) visit_exprs(*l.index, f);
}

}  // namespace

void visit_stmts(const TBlock& b, const std::function<void(const TStmt&)>& f) {
  for (const auto& s : b) {
    f(*s);
    visit_stmts(s->body, f);
    visit_stmts(s->else_b, f);
    for (const auto& a : s->arms) visit_stmts(a.body, f);
    for (const auto& h : s->handlers) visit_stmts(h.body, f);
  }
}

void visit_block_exprs(const TBlock& b, const std::function<void(const TExpr&)>& f) {
  visit_stmts(b, [&](const TStmt& s) {
    if (s.kind == TStmtKind::Assign) visit_lhs(s.lhs, f);
    for (const auto& d : s.dsts) visit_lhs(d, f);
    for (const TExprP* p : {&s.rhs, &s.cond, &s.from, &s.to})
      if (*p) visit_exprs(**p, f);
    for (const auto& a : s.args) visit_exprs(*a, f);
  });
}

void collect_expr_reads(const TExpr& e, std::vector<int>& out) {
  visit_exprs(e, [&](const TExpr& x) {
    if (x.kind == TExprKind::Obj || x.kind == TExprKind::Elem) out.push_back(x.obj);
  });
}

void collect_reads(const TBlock& b, std::vector<int>& out) {
  visit_block_exprs(b, [&](const TExpr& x) {
    if (x.kind == TExprKind::Obj || x.kind == TExprKind::Elem) out.push_back(x.obj);
  });
  // loop counters are read by their own condition and increment
  visit_stmts(b, [&](const TStmt& s) {
    if (s.kind == TStmtKind::For) out.push_back(s.loop_obj);
    // partial (bit range) writes read the remaining bits
    if (s.kind == TStmtKind::Assign && s.lhs.lo >= 0) out.push_back(s.lhs.obj);
  });
}

int64_t index_mod(int64_t i, int size) {
  if (size <= 0) return 0;
  int64_t r = i % size;
  return r < 0 ? r + size : r;
}

int64_t eval_expr(const TExpr& e, const ReadFn& read) {
  switch (e.kind) {
    case TExprKind::Const: return e.value;
    case TExprKind::Obj: return wrap(e.type, read(e.obj, -1));
    case TExprKind::Elem: return wrap(e.type, read(e.obj, eval_expr(*e.args[0], read)));
    case TExprKind::Bits: {
      uint64_t v = static_cast<uint64_t>(eval_expr(*e.args[0], read)) >> e.lo;
      return wrap(e.type, static_cast<int64_t>(v));
    }
    case TExprKind::Unary: return eval_unary(e.op, e.type, eval_expr(*e.args[0], read));
    case TExprKind::Binary: {
      int64_t a = eval_expr(*e.args[0], read);
      int64_t b = eval_expr(*e.args[1], read);
      return eval_binary(e.op, e.args[0]->type, a, e.args[1]->type, b);
    }
    case TExprKind::Convert: return convert(e.args[0]->type, e.type, eval_expr(*e.args[0], read));
  }
  return 0;
}

void collect_writes(const TBlock& b, std::vector<int>& out) {
  visit_stmts(b, [&](const TStmt& s) {
    if (s.kind == TStmtKind::Assign) out.push_back(s.lhs.obj);
    if (s.kind == TStmtKind::For) out.push_back(s.loop_obj);
    for (const auto& d : s.dsts) out.push_back(d.obj);
  });
}

bool function_interface(const TypedModule& m, int obj) {
  for (const auto& f : m.functions) {
    if (f.exc == obj) return true;
    for (int a : f.args)
      if (a == obj) return true;
    for (int r : f.rets)
      if (r == obj) return true;
  }
  return false;
}

}  // namespace hls

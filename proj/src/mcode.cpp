#include "hls/mcode.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "hls/sema.hpp"

namespace hls {

std::string_view opcode_name(MOpcode op) {
  switch (op) {
    case MOpcode::Move: return "move";
    case MOpcode::Expr: return "expr";
    case MOpcode::Bind: return "bind";
    case MOpcode::Jump: return "jump";
    case MOpcode::FalseJump: return "falsejump";
    case MOpcode::Fun: return "fun";
    case MOpcode::Label: return "label";
    case MOpcode::Special: return "special";
    case MOpcode::Nop: return "nop";
  }
  return "?";
}

const MDecl* MProgram::find_decl(const std::string& name) const {
  for (const auto& d : data)
    if (d.name == name) return &d;
  for (const auto& d : imports)
    if (d.name == name) return &d;
  return nullptr;
}

namespace {

MInstr instr(MOpcode op, std::vector<MOperand> ops = {}) {
  MInstr i;
  i.op = op;
  i.ops = std::move(ops);
  return i;
}

MInstr label(std::string name) {
  MInstr i = instr(MOpcode::Label);
  i.target = std::move(name);
  return i;
}

MInstr jump(std::string target) {
  MInstr i = instr(MOpcode::Jump);
  i.target = std::move(target);
  return i;
}

MInstr falsejump(MOperand c, std::string target) {
  MInstr i = instr(MOpcode::FalseJump, {std::move(c)});
  i.target = std::move(target);
  return i;
}

MInstr bind(int n) {
  MInstr i = instr(MOpcode::Bind);
  i.count = n;
  return i;
}

MInstr move(MOperand d, MOperand s) { return instr(MOpcode::Move, {std::move(d), std::move(s)}); }

MInstr expr2(MOperand d, MOperand a, Op op, MOperand b) {
  MInstr i = instr(MOpcode::Expr, {std::move(d), std::move(a), std::move(b)});
  i.alu = op;
  return i;
}

MInstr expr1(MOperand d, Op op, MOperand a) {
  MInstr i = instr(MOpcode::Expr, {std::move(d), std::move(a)});
  i.alu = op;
  return i;
}

MInstr fun(std::string obj, std::string method, std::vector<MOperand> args = {}) {
  MInstr i = instr(MOpcode::Fun);
  i.ops.push_back(MOperand::object(std::move(obj)));
  for (auto& a : args) i.ops.push_back(std::move(a));
  i.method = std::move(method);
  return i;
}

const TExpr& strip_convert(const TExpr& e) {
  const TExpr* p = &e;
  while (p->kind == TExprKind::Convert) p = p->args[0].get();
  return *p;
}

bool is_op_node(const TExpr& e) { return e.kind == TExprKind::Binary || e.kind == TExprKind::Unary; }

class Lowerer {
 public:
  Lowerer(const TypedModule& m, int proc, const LowerOptions& o)
      : m_(m), p_(m.processes.at(static_cast<size_t>(proc))), o_(o) {
    if (p_.function >= 0) fn_ = &m.functions.at(static_cast<size_t>(p_.function));
    for (int id : p_.locals)
      if (m.obj(id).name == "EXCEPTION") exc_ = id;
      else if (m.obj(id).name == "WAIT") wait_ = id;
  }

  MProgram run() {
    if (fn_ && fn_->can_raise) {
      int n = next();
      std::string l = tag(n, "assign");
      emit(label(l));
      emit(move(obj_operand(fn_->exc), MOperand::constant(0)));
      emit(label(l + "_end"));
      emit(instr(MOpcode::Nop));
    }
    block(p_.body);

    MProgram out;
    out.process = p_.name;
    out.code = std::move(code_);
    for (int id : p_.locals) {
      const Object& o = m_.obj(id);
      if (!o.dead) out.data.push_back(decl(o));
    }
    for (size_t i = 0; i < temps_.size(); ++i)
      out.data.push_back({"temp", "$temp.[" + std::to_string(i + 1) + "]", temps_[i], 0});
    for (int id : used_) {
      const Object& o = m_.obj(id);
      if (o.global) out.imports.push_back(decl(o));
    }
    return out;
  }

 private:
  const TypedModule& m_;
  const TProcess& p_;
  LowerOptions o_;
  const TFunction* fn_ = nullptr;
  int exc_ = -1, wait_ = -1;

  std::vector<MInstr> code_;
  std::vector<MInstr>* sink_ = &code_;
  int counter_ = 0;
  int immed_ = 0;
  std::vector<std::string> tries_;
  std::set<int> used_;
  std::vector<DataType> temps_;
  std::vector<bool> temp_busy_;

  bool shared() const { return o_.alu == LowerOptions::Alu::Shared; }

  int next() { return ++counter_; }
  std::string tag(int n, const std::string& kind) const { return "i" + std::to_string(n) + "_" + kind; }
  void emit(MInstr i) { sink_->push_back(std::move(i)); }

  static MDecl decl(const Object& o) {
    MDecl d;
    d.kind = std::string(obj_kind_name(o.kind));
    d.name = o.name;
    if (o.is_storage() || o.kind == ObjKind::Queue || o.kind == ObjKind::Channel) d.type = o.type;
    d.size = o.array_size;
    return d;
  }

  MOperand obj_operand(int id) {
    used_.insert(id);
    return MOperand::object(m_.obj(id).name);
  }

  // ------------------------------------------------------------ operands

  /// Result slot of an operator node: $immed in the flat model, a fresh
  /// temporary register in the shared model.
  MOperand slot(DataType t) {
    if (!shared()) return MOperand::numbered(MOperandKind::Immed, ++immed_);
    for (size_t i = 0; i < temps_.size(); ++i)
      if (!temp_busy_[i] && temps_[i] == t) {
        temp_busy_[i] = true;
        return MOperand::numbered(MOperandKind::Temp, static_cast<int64_t>(i + 1));
      }
    temps_.push_back(t);
    temp_busy_.push_back(true);
    return MOperand::numbered(MOperandKind::Temp, static_cast<int64_t>(temps_.size()));
  }

  void release_temps() { std::fill(temp_busy_.begin(), temp_busy_.end(), false); }

  MInstr op_instr(MOperand dst, const TExpr& e) {
    if (e.kind == TExprKind::Unary) {
      MOperand a = operand(*e.args[0]);
      MInstr i = expr1(std::move(dst), e.op, std::move(a));
      if (shared()) i.unit = 1;
      return i;
    }
    MOperand a = operand(*e.args[0]);
    MOperand b = operand(*e.args[1]);
    // constants are typed by the other operand unless annotated
    const TExpr& ea = *e.args[0];
    const TExpr& eb = *e.args[1];
    if (a.kind == MOperandKind::Const && !a.conv && (eb.kind == TExprKind::Const || !(ea.type == eb.type)))
      a.conv = ea.type;
    if (b.kind == MOperandKind::Const && !b.conv && (ea.kind == TExprKind::Const || !(ea.type == eb.type)))
      b.conv = eb.type;
    MInstr i = expr2(std::move(dst), std::move(a), e.op, std::move(b));
    if (shared()) i.unit = 1;
    return i;
  }

  /// Operand for `e`, emitting instructions for operator sub-trees first.
  MOperand operand(const TExpr& e) {
    switch (e.kind) {
      case TExprKind::Const: return MOperand::constant(e.value);
      case TExprKind::Obj: return obj_operand(e.obj);
      case TExprKind::Elem: {
        MOperand o = obj_operand(e.obj);
        o.index.push_back(operand(*e.args[0]));
        return o;
      }
      case TExprKind::Bits: {
        const TExpr& inner = *e.args[0];
        MOperand x = operand(inner);
        if (x.conv || x.lo >= 0 || x.kind == MOperandKind::Const) {
          MOperand s = slot(inner.type);
          emit(move(s, x));
          x = s;
        }
        x.lo = e.lo;
        x.hi = e.hi;
        return x;
      }
      case TExprKind::Convert: {
        const TExpr& inner = *e.args[0];
        MOperand x = operand(inner);
        if (x.conv) {
          MOperand s = slot(inner.type);
          emit(move(s, x));
          x = s;
        }
        x.conv = e.type;
        return x;
      }
      case TExprKind::Unary:
      case TExprKind::Binary: {
        MOperand s = slot(e.type);
        emit(op_instr(s, e));
        return s;
      }
    }
    throw InternalError("unlowered expression");
  }

  MOperand lhs_operand(const TLhs& l) {
    MOperand o = obj_operand(l.obj);
    if (l.index) o.index.push_back(operand(*l.index));
    o.lo = l.lo;
    o.hi = l.hi;
    return o;
  }

  /// Instructions computing `rhs` into `dst` (root conversions are implied
  /// by the write).
  void assign_into(const MOperand& dst, const TExpr& rhs_in) {
    const TExpr& rhs = strip_convert(rhs_in);
    if (is_op_node(rhs)) {
      if (!shared()) ++immed_;  // the root keeps its pre-order number
      emit(op_instr(dst, rhs));
      return;
    }
    MOperand x = operand(rhs);
    emit(move(dst, x));
  }

  /// Wraps a flat chain: single move as is, a single expr followed by nop,
  /// longer chains bound into one group.
  void flush_chain(std::vector<MInstr>& chain) {
    if (chain.empty()) return;
    if (chain.size() == 1 && chain[0].op == MOpcode::Move) {
      code_.push_back(std::move(chain[0]));
      return;
    }
    if (chain.size() > 1) code_.push_back(bind(static_cast<int>(chain.size())));
    for (auto& i : chain) code_.push_back(std::move(i));
    code_.push_back(instr(MOpcode::Nop));
  }

  void assignment(const TLhs& l, const TExpr& rhs) {
    immed_ = 0;
    std::vector<MInstr> chain;
    sink_ = shared() ? &code_ : &chain;
    size_t before = code_.size();
    MOperand dst = lhs_operand(l);
    assign_into(dst, rhs);
    sink_ = &code_;
    if (shared()) {
      if (code_.size() > before && code_.back().op == MOpcode::Expr) code_.push_back(instr(MOpcode::Nop));
    } else {
      flush_chain(chain);
    }
    release_temps();
  }

  /// `eval(cond); falsejump target` as one group.
  void cond_jump(const TExpr& c, const std::string& target) {
    immed_ = 0;
    std::vector<MInstr> group;
    if (!shared()) sink_ = &group;
    MOperand cond;
    if (is_op_node(c)) {
      MOperand s = MOperand::numbered(MOperandKind::Immed, ++immed_);
      MInstr root = op_instr(s, c);
      sink_ = &group;
      group.push_back(std::move(root));
      cond = s;
    } else {
      cond = operand(c);
    }
    sink_ = &code_;
    group.push_back(falsejump(cond, target));
    if (group.size() > 1) code_.push_back(bind(static_cast<int>(group.size())));
    for (auto& i : group) code_.push_back(std::move(i));
    release_temps();
  }

  // ---------------------------------------------------------- statements

  void block(const TBlock& b) {
    for (const auto& s : b) stmt(*s);
  }

  void raise_jump() {
    if (!tries_.empty()) {
      emit(jump(tries_.back()));
      return;
    }
    if (fn_ && fn_->can_raise) emit(move(obj_operand(fn_->exc), obj_operand(exc_)));
    emit(jump("%END"));
  }

  TExprP exc_test(const std::vector<int>& excs) {
    DataType t = m_.obj(exc_).type;
    TExprP c;
    for (int e : excs) {
      TExprP eq = make_binary(Op::Eq, DataType::boolean(), make_obj(exc_, t), make_const(t, e));
      c = c ? make_binary(Op::Or, DataType::boolean(), c, eq) : eq;
    }
    return c;
  }

  TExprP choice_test(const TExprP& subj, const std::vector<TChoice>& choices) {
    DataType t = subj->type;
    TExprP c;
    for (const auto& ch : choices) {
      TExprP one;
      if (ch.lo == ch.hi) {
        one = make_binary(Op::Eq, DataType::boolean(), subj, make_const(t, ch.lo));
      } else {
        one = make_binary(Op::And, DataType::boolean(),
                          make_binary(Op::Ge, DataType::boolean(), subj, make_const(t, ch.lo)),
                          make_binary(Op::Le, DataType::boolean(), subj, make_const(t, ch.hi)));
      }
      c = c ? make_binary(Op::Or, DataType::boolean(), c, one) : one;
    }
    return c;
  }

  void assign_stmt(const TLhs& l, const TExpr& rhs) {
    std::string t = tag(next(), "assign");
    emit(label(t));
    assignment(l, rhs);
    emit(label(t + "_end"));
    emit(instr(MOpcode::Nop));
  }

  void bind_stmt(const TStmt& s) {
    int first = counter_ + 1;
    counter_ += static_cast<int>(s.body.size());
    std::string t = "i" + std::to_string(first) + "_bind_to_" + std::to_string(counter_);
    emit(label(t));
    immed_ = 0;
    std::vector<MInstr> group;
    if (!shared()) {
      sink_ = &group;
      for (const auto& a : s.body) assign_into(lhs_operand(a->lhs), *a->rhs);
      sink_ = &code_;
    } else {
      // operator trees go to temporaries first, the bound group only moves
      for (const auto& a : s.body) {
        MOperand dst = lhs_operand(a->lhs);
        const TExpr& rhs = strip_convert(*a->rhs);
        MOperand src = operand(rhs);
        group.push_back(move(dst, src));
      }
    }
    code_.push_back(bind(static_cast<int>(group.size()) + 1));
    for (auto& i : group) code_.push_back(std::move(i));
    code_.push_back(instr(MOpcode::Nop));
    release_temps();
    emit(label(t + "_end"));
    emit(instr(MOpcode::Nop));
  }

  void stmt(const TStmt& s) {
    switch (s.kind) {
      case TStmtKind::Assign: assign_stmt(s.lhs, *s.rhs); return;
      case TStmtKind::Bind:
        if (!o_.bind_source) {
          for (const auto& a : s.body) assign_stmt(a->lhs, *a->rhs);
          return;
        }
        bind_stmt(s);
        return;
      case TStmtKind::If: {
        std::string t = tag(next(), "branch");
        emit(label(t));
        bool has_else = !s.else_b.empty();
        cond_jump(*s.cond, has_else ? t + "_else" : t + "_end");
        block(s.body);
        if (has_else) {
          emit(jump(t + "_end"));
          emit(label(t + "_else"));
          block(s.else_b);
        }
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::Match: {
        std::string t = tag(next(), "select");
        emit(label(t));
        int k = 0;
        for (const auto& a : s.arms) {
          ++k;
          std::string nxt = t + "_case" + std::to_string(k + 1);
          emit(label(t + "_case" + std::to_string(k)));
          if (!a.others) cond_jump(*choice_test(s.cond, a.choices), nxt);
          block(a.body);
          emit(jump(t + "_end"));
          if (a.others) break;
          if (&a == &s.arms.back()) emit(label(nxt));
        }
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::For: {
        std::string t = tag(next(), "for_loop");
        DataType lt = m_.obj(s.loop_obj).type;
        TLhs loop;
        loop.obj = s.loop_obj;
        loop.type = lt;
        emit(label(t));
        assignment(loop, *s.from);
        emit(label(t + "_cond"));
        TExprP iv = make_obj(s.loop_obj, lt);
        TExprP to = make_convert(lt, s.to);
        cond_jump(*make_binary(Op::Ge, DataType::boolean(), s.downto ? iv : to, s.downto ? to : iv), t + "_end");
        block(s.body);
        emit(label(t + "_incr"));
        MInstr inc = expr2(obj_operand(s.loop_obj), obj_operand(s.loop_obj), s.downto ? Op::Sub : Op::Add,
                           MOperand::constant(wrap(lt, s.step)));
        if (shared()) inc.unit = 1;
        emit(bind(3));
        emit(std::move(inc));
        emit(instr(MOpcode::Nop));
        emit(jump(t + "_cond"));
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::While: {
        std::string t = tag(next(), "while_loop");
        emit(label(t));
        cond_jump(*s.cond, t + "_end");
        block(s.body);
        emit(jump(t));
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::Always: {
        std::string t = tag(next(), "loop");
        emit(label(t));
        block(s.body);
        emit(jump(t));
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::Wait: {
        std::string t = tag(next(), "wait");
        emit(label(t));
        MOperand w = obj_operand(wait_);
        if (s.cycles <= 1) {
          emit(move(w, MOperand::constant(0)));
        } else {
          emit(move(w, MOperand::constant(s.cycles - 2)));
          emit(label(t + "_loop"));
          MOperand c = MOperand::numbered(MOperandKind::Immed, 1);
          emit(bind(3));
          emit(expr2(c, w, Op::Eq, MOperand::constant(0)));
          emit(expr2(w, w, Op::Sub, MOperand::constant(1)));
          emit(falsejump(c, t + "_loop"));
        }
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::WaitCond: {
        std::string t = tag(next(), "wait");
        bool has_else = !s.else_b.empty();
        emit(label(t));
        cond_jump(*s.cond, has_else ? t + "_else" : t);
        block(s.body);
        if (has_else) {
          emit(jump(t + "_end"));
          emit(label(t + "_else"));
          block(s.else_b);
          emit(jump(t));
        }
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::Method: {
        std::string t = tag(next(), "fun");
        emit(label(t));
        std::vector<MOperand> args;
        for (const auto& a : s.args) args.push_back(MOperand::constant(a->value));
        used_.insert(s.obj);
        emit(fun(m_.obj(s.obj).name, s.method, std::move(args)));
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::Call: call(s); return;
      case TStmtKind::Raise: {
        std::string t = tag(next(), "raise");
        emit(label(t));
        MOperand id = MOperand::constant(s.exc);
        if (tries_.empty() && fn_ && fn_->can_raise) {
          emit(move(obj_operand(fn_->exc), id));
          emit(jump("%END"));
        } else {
          emit(move(obj_operand(exc_), id));
          raise_jump();
        }
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
      case TStmtKind::Try: {
        std::string t = tag(next(), "try");
        emit(label(t));
        tries_.push_back(t + "_catch");
        block(s.body);
        tries_.pop_back();
        emit(jump(t + "_end"));
        emit(label(t + "_catch"));
        bool caught_all = false;
        int k = 0;
        for (const auto& h : s.handlers) {
          ++k;
          std::string nxt = t + "_catch" + std::to_string(k + 1);
          if (!h.others) cond_jump(*exc_test(h.excs), nxt);
          emit(move(obj_operand(exc_), MOperand::constant(0)));
          block(h.body);
          emit(jump(t + "_end"));
          if (h.others) {
            caught_all = true;
            break;
          }
          emit(label(nxt));
        }
        if (!caught_all) raise_jump();
        emit(label(t + "_end"));
        emit(instr(MOpcode::Nop));
        return;
      }
    }
    throw InternalError("unlowered statement");
  }

  void call(const TStmt& s) {
    const TFunction& f = m_.functions.at(static_cast<size_t>(s.obj));
    const std::string lock = m_.obj(f.lock).name;
    const std::string fproc = m_.processes.at(static_cast<size_t>(f.process)).name;
    used_.insert(f.lock);
    used_.insert(m_.processes.at(static_cast<size_t>(f.process)).obj);

    std::string t = tag(next(), "fun");
    emit(label(t));
    emit(fun(lock, "lock"));
    emit(label(t + "_end"));
    emit(instr(MOpcode::Nop));
    for (size_t i = 0; i < s.args.size(); ++i) {
      TLhs l;
      l.obj = f.args[i];
      l.type = m_.obj(f.args[i]).type;
      assign_stmt(l, *s.args[i]);
    }
    std::string c = tag(next(), "fun");
    emit(label(c));
    emit(fun(fproc, "call"));
    if (f.can_raise) {
      MOperand imm = MOperand::numbered(MOperandKind::Immed, 1);
      emit(bind(2));
      emit(expr2(imm, obj_operand(f.exc), Op::Eq, MOperand::constant(0)));
      emit(falsejump(imm, c + "_raise"));
    }
    emit(label(c + "_end"));
    emit(instr(MOpcode::Nop));
    for (size_t i = 0; i < s.dsts.size(); ++i) {
      TExprP r = make_obj(f.rets[i], m_.obj(f.rets[i]).type);
      assign_stmt(s.dsts[i], *r);
    }
    std::string u = tag(next(), "fun");
    emit(label(u));
    emit(fun(lock, "unlock"));
    emit(label(u + "_end"));
    emit(instr(MOpcode::Nop));
    if (f.can_raise) {
      emit(jump(c + "_done"));
      emit(label(c + "_raise"));
      emit(move(obj_operand(exc_), obj_operand(f.exc)));
      emit(fun(lock, "unlock"));
      raise_jump();
      emit(label(c + "_done"));
      emit(instr(MOpcode::Nop));
    }
  }
};

// ------------------------------------------------------------------ text

std::string trim(std::string_view s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_top(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '[' || ch == '(') ++depth;
    if (ch == ']' || ch == ')') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
      continue;
    }
    cur += ch;
  }
  out.push_back(trim(cur));
  return out;
}

struct OperandParser {
  std::string_view s;
  size_t pos = 0;
  int line;

  [[noreturn]] void fail(const std::string& msg) const {
    throw MParseError(line, msg + " in operand '" + std::string(s) + "'");
  }
  bool eat(std::string_view t) {
    if (s.substr(pos, t.size()) == t) {
      pos += t.size();
      return true;
    }
    return false;
  }
  int64_t number() {
    size_t start = pos;
    if (pos < s.size() && s[pos] == '-') ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == start || (pos == start + 1 && s[start] == '-')) fail("expected number");
    return std::stoll(std::string(s.substr(start, pos - start)));
  }

  MOperand parse() {
    MOperand o;
    auto numbered = [&](MOperandKind k) {
      o.kind = k;
      o.value = number();
      if (!eat("]")) fail("expected ']'");
    };
    if (eat("$immed.[")) numbered(MOperandKind::Immed);
    else if (eat("$temp.[")) numbered(MOperandKind::Temp);
    else if (eat("$alu.[")) numbered(MOperandKind::Alu);
    else if (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '-')) {
      o.kind = MOperandKind::Const;
      o.value = number();
    } else {
      size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
      if (pos == start) fail("expected operand");
      o.kind = MOperandKind::Object;
      o.name = std::string(s.substr(start, pos - start));
      if (eat(".[")) {
        o.index.push_back(parse());
        if (!eat("]")) fail("expected ']'");
      }
    }
    if (eat("[")) {
      o.hi = static_cast<int>(number());
      if (!eat(":")) fail("expected ':'");
      o.lo = static_cast<int>(number());
      if (!eat("]")) fail("expected ']'");
    }
    if (eat(":")) {
      size_t start = pos;
      while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
      auto t = parse_type_suffix(s.substr(start, pos - start));
      if (!t) fail("bad type suffix");
      o.conv = *t;
    }
    return o;
  }
};

MOperand parse_operand(std::string_view s, int line) {
  OperandParser p{s, 0, line};
  MOperand o = p.parse();
  if (p.pos != s.size()) p.fail("trailing characters");
  return o;
}

std::string decl_text(const MDecl& d) {
  std::string s = d.kind + " " + d.name;
  if (d.size > 0) s += "[" + std::to_string(d.size) + "]";
  if (d.type) s += ": " + type_suffix(*d.type);
  return s;
}

MDecl parse_decl(const std::string& line, int ln) {
  MDecl d;
  size_t sp = line.find(' ');
  if (sp == std::string::npos) throw MParseError(ln, "malformed declaration '" + line + "'");
  d.kind = line.substr(0, sp);
  std::string rest = trim(line.substr(sp + 1));
  size_t colon = rest.rfind(": ");
  if (colon != std::string::npos) {
    auto t = parse_type_suffix(trim(rest.substr(colon + 2)));
    if (!t) throw MParseError(ln, "bad type in declaration '" + line + "'");
    d.type = *t;
    rest = trim(rest.substr(0, colon));
  }
  if (d.kind != "temp" && !rest.empty() && rest.back() == ']') {
    size_t lb = rest.rfind('[');
    if (lb == std::string::npos) throw MParseError(ln, "malformed array size");
    d.size = std::stoi(rest.substr(lb + 1, rest.size() - lb - 2));
    rest = rest.substr(0, lb);
  }
  d.name = rest;
  return d;
}

}  // namespace

MProgram lower_process(const TypedModule& m, int process, const LowerOptions& opt) {
  return Lowerer(m, process, opt).run();
}

MProgram compact(MProgram p) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<MInstr> out;
    const auto& c = p.code;
    bool dead = false;
    for (size_t i = 0; i < c.size();) {
      const MInstr& in = c[i];
      if (in.op == MOpcode::Label) {
        dead = false;
        out.push_back(in);
        ++i;
        continue;
      }
      size_t n = in.op == MOpcode::Bind ? static_cast<size_t>(in.count) + 1 : 1;
      n = std::min(n, c.size() - i);
      if (dead || (in.op == MOpcode::Nop)) {
        i += n;
        changed = true;
        continue;
      }
      for (size_t k = 0; k < n; ++k) out.push_back(c[i + k]);
      if (c[i + n - 1].op == MOpcode::Jump) dead = true;
      i += n;
    }

    // label chains: the last label survives, trailing labels become %END
    std::map<std::string, std::string> alias;
    std::vector<MInstr> merged;
    for (size_t i = 0; i < out.size();) {
      if (out[i].op != MOpcode::Label) {
        merged.push_back(std::move(out[i]));
        ++i;
        continue;
      }
      size_t j = i;
      while (j + 1 < out.size() && out[j + 1].op == MOpcode::Label) ++j;
      bool at_end = j + 1 == out.size();
      std::string keep = at_end ? "%END" : out[j].target;
      for (size_t k = i; k <= j; ++k)
        if (out[k].target != keep) {
          alias[out[k].target] = keep;
          changed = true;
        }
      if (!at_end) merged.push_back(std::move(out[j]));
      i = j + 1;
    }
    for (auto& in : merged)
      if ((in.op == MOpcode::Jump || in.op == MOpcode::FalseJump) && alias.count(in.target))
        in.target = alias[in.target];
    p.code = std::move(merged);
  }
  return p;
}

std::string operand_text(const MOperand& o) {
  std::string s;
  switch (o.kind) {
    case MOperandKind::Object:
      s = o.name;
      if (!o.index.empty()) s += ".[" + operand_text(o.index[0]) + "]";
      break;
    case MOperandKind::Const: s = std::to_string(o.value); break;
    case MOperandKind::Immed: s = "$immed.[" + std::to_string(o.value) + "]"; break;
    case MOperandKind::Temp: s = "$temp.[" + std::to_string(o.value) + "]"; break;
    case MOperandKind::Alu: s = "$alu.[" + std::to_string(o.value) + "]"; break;
  }
  if (o.lo >= 0) s += "[" + std::to_string(o.hi) + ":" + std::to_string(o.lo) + "]";
  if (o.conv) s += ":" + type_suffix(*o.conv);
  return s;
}

std::string instr_text(const MInstr& i) {
  auto args = [](const std::vector<std::string>& xs) {
    std::string s = "(";
    for (size_t k = 0; k < xs.size(); ++k) s += (k ? "," : "") + xs[k];
    return s + ")";
  };
  std::string name(opcode_name(i.op));
  switch (i.op) {
    case MOpcode::Move: return name + " " + args({operand_text(i.ops[0]), operand_text(i.ops[1])});
    case MOpcode::Expr: {
      std::vector<std::string> xs{operand_text(i.ops[0])};
      if (i.ops.size() == 2) {
        xs.emplace_back(op_text(i.alu));
        xs.push_back(operand_text(i.ops[1]));
      } else {
        xs.push_back(operand_text(i.ops[1]));
        xs.emplace_back(op_text(i.alu));
        xs.push_back(operand_text(i.ops[2]));
      }
      if (i.unit > 0) xs.push_back(operand_text(MOperand::numbered(MOperandKind::Alu, i.unit)));
      return name + " " + args(xs);
    }
    case MOpcode::Bind: return name + " (" + std::to_string(i.count) + ")";
    case MOpcode::Jump: return name + " (" + i.target + ")";
    case MOpcode::FalseJump: return name + " " + args({operand_text(i.ops[0]), i.target});
    case MOpcode::Fun: {
      std::vector<std::string> xs{operand_text(i.ops[0]), i.method};
      for (size_t k = 1; k < i.ops.size(); ++k) xs.push_back(operand_text(i.ops[k]));
      return name + " " + args(xs);
    }
    case MOpcode::Label: return i.target + ":";
    case MOpcode::Special: return name + " (" + i.target + ")";
    case MOpcode::Nop: return name;
  }
  return name;
}

std::string emit_text(const MProgram& p) {
  std::ostringstream os;
  os << "process " << p.process << ":\n";
  auto segment = [&](const char* name, const std::vector<MDecl>& ds) {
    os << name << ":\nbegin\n";
    for (const auto& d : ds) os << "  " << decl_text(d) << "\n";
    os << "end\n\n";
  };
  segment("import", p.imports);
  segment("data", p.data);
  os << "code:\nbegin\n";
  for (const auto& i : p.code) os << (i.op == MOpcode::Label ? "    " : "        ") << instr_text(i) << "\n";
  os << "end\n";
  return os.str();
}

namespace {
std::string check_at(const MProgram& p, size_t& at);
}  // namespace

MProgram parse_text(std::string_view text) {
  MProgram p;
  std::istringstream is{std::string(text)};
  std::string raw;
  int ln = 0;
  std::vector<int> lines;  // source line of each instruction
  enum class Seg { None, Import, Data, Code } seg = Seg::None;
  bool open = false;
  while (std::getline(is, raw)) {
    ++ln;
    std::string line = trim(raw);
    if (line.empty() || line.rfind("--", 0) == 0) continue;
    if (!open) {
      if (line.rfind("process ", 0) == 0 && line.back() == ':') {
        p.process = trim(line.substr(8, line.size() - 9));
        continue;
      }
      if (line == "import:") seg = Seg::Import;
      else if (line == "data:") seg = Seg::Data;
      else if (line == "code:") seg = Seg::Code;
      else if (line == "begin" && seg != Seg::None) open = true;
      else throw MParseError(ln, "unexpected '" + line + "' outside of a segment");
      continue;
    }
    if (line == "end") {
      open = false;
      seg = Seg::None;
      continue;
    }
    if (seg == Seg::Import || seg == Seg::Data) {
      (seg == Seg::Import ? p.imports : p.data).push_back(parse_decl(line, ln));
      continue;
    }
    // code
    if (line.back() == ':' && line.find('(') == std::string::npos) {
      MInstr l = instr(MOpcode::Label);
      l.target = line.substr(0, line.size() - 1);
      p.code.push_back(l);
      lines.push_back(ln);
      continue;
    }
    std::string op = line, argtext;
    size_t paren = line.find('(');
    if (paren != std::string::npos) {
      op = trim(line.substr(0, paren));
      if (line.back() != ')') throw MParseError(ln, "missing ')'");
      argtext = line.substr(paren + 1, line.size() - paren - 2);
    }
    std::vector<std::string> a = paren == std::string::npos ? std::vector<std::string>{} : split_top(argtext);
    auto arity = [&](size_t lo, size_t hi) {
      if (a.size() < lo || a.size() > hi)
        throw MParseError(ln, "wrong number of operands for '" + op + "'");
    };
    MInstr in;
    if (op == "move") {
      arity(2, 2);
      in = move(parse_operand(a[0], ln), parse_operand(a[1], ln));
    } else if (op == "expr") {
      arity(3, 5);
      int unit = 0;
      if (a.back().rfind("$alu.[", 0) == 0) {
        unit = static_cast<int>(parse_operand(a.back(), ln).value);
        a.pop_back();
      }
      if (a.size() == 3) {
        auto o = op_from_text(a[1], true);
        if (!o) throw MParseError(ln, "unknown unary operation '" + a[1] + "'");
        in = expr1(parse_operand(a[0], ln), *o, parse_operand(a[2], ln));
      } else if (a.size() == 4) {
        auto o = op_from_text(a[2], false);
        if (!o) throw MParseError(ln, "unknown operation '" + a[2] + "'");
        in = expr2(parse_operand(a[0], ln), parse_operand(a[1], ln), *o, parse_operand(a[3], ln));
      } else {
        throw MParseError(ln, "wrong number of operands for 'expr'");
      }
      in.unit = unit;
    } else if (op == "bind") {
      arity(1, 1);
      in = bind(std::stoi(a[0]));
    } else if (op == "jump") {
      arity(1, 1);
      in = jump(a[0]);
    } else if (op == "falsejump") {
      arity(2, 2);
      in = falsejump(parse_operand(a[0], ln), a[1]);
    } else if (op == "fun") {
      if (a.size() < 2) throw MParseError(ln, "wrong number of operands for 'fun'");
      std::vector<MOperand> args;
      for (size_t k = 2; k < a.size(); ++k) args.push_back(parse_operand(a[k], ln));
      in = fun(a[0], a[1], std::move(args));
    } else if (op == "special") {
      arity(1, 1);
      in = instr(MOpcode::Special);
      in.target = a[0];
    } else if (op == "nop") {
      if (paren != std::string::npos) throw MParseError(ln, "nop takes no operands");
      in = instr(MOpcode::Nop);
    } else {
      throw MParseError(ln, "unknown opcode '" + op + "'");
    }
    p.code.push_back(std::move(in));
    lines.push_back(ln);
  }
  if (open) throw MParseError(ln, "missing 'end'");
  size_t at = 0;
  if (std::string err = check_at(p, at); !err.empty()) throw MParseError(lines.at(at), err);
  return p;
}

namespace {

// First structural violation and the index of the offending instruction.
std::string check_at(const MProgram& p, size_t& at) {
  std::set<std::string> labels;
  for (size_t k = 0; k < p.code.size(); ++k) {
    const MInstr& i = p.code[k];
    at = k;
    if (i.op == MOpcode::Label && !labels.insert(i.target).second) return "duplicate label '" + i.target + "'";
  }
  for (size_t k = 0; k < p.code.size(); ++k) {
    const MInstr& i = p.code[k];
    at = k;
    if ((i.op == MOpcode::Jump || i.op == MOpcode::FalseJump) && i.target != "%END" && !labels.count(i.target))
      return "jump to undefined label '" + i.target + "'";
    if (i.op == MOpcode::Bind) {
      if (i.count < 1) return "empty bind group";
      if (k + static_cast<size_t>(i.count) >= p.code.size()) return "bind group runs past the end of the program";
      for (int n = 1; n <= i.count; ++n) {
        MOpcode o = p.code[k + static_cast<size_t>(n)].op;
        if (o == MOpcode::Bind || o == MOpcode::Label) return "bind group contains a bind or label";
      }
    }
  }
  return {};
}

}  // namespace

std::string check_program(const MProgram& p) {
  size_t at = 0;
  return check_at(p, at);
}

std::vector<MState> program_states(const MProgram& p, std::map<std::string, int>* targets) {
  std::vector<MState> out;
  std::vector<std::string> pending;
  std::string last = "i0";
  int sub = 0;
  for (size_t i = 0; i < p.code.size();) {
    const MInstr& in = p.code[i];
    if (in.op == MOpcode::Label) {
      pending.push_back(in.target);
      ++i;
      continue;
    }
    MState s;
    s.first = static_cast<int>(i);
    s.bind = in.op == MOpcode::Bind;
    s.count = s.bind ? in.count + 1 : 1;
    if (!pending.empty()) {
      s.label = pending.back();
      last = s.label;
      sub = 0;
      if (targets)
        for (const auto& l : pending) (*targets)[l] = static_cast<int>(out.size());
      pending.clear();
    } else {
      s.label = last + "_" + std::to_string(++sub);
    }
    out.push_back(s);
    i += static_cast<size_t>(s.count);
  }
  if (targets) {
    for (const auto& l : pending) (*targets)[l] = static_cast<int>(out.size());
    (*targets)["%END"] = static_cast<int>(out.size());
  }
  return out;
}

std::vector<std::string> opcode_sequence(const MProgram& p, bool skip_nop) {
  std::vector<std::string> out;
  for (const auto& i : p.code) {
    if (i.op == MOpcode::Label) continue;
    if (skip_nop && i.op == MOpcode::Nop) continue;
    if (i.op == MOpcode::Bind) out.push_back("bind" + std::to_string(i.count));
    else out.emplace_back(opcode_name(i.op));
  }
  return out;
}

// ------------------------------------------------------------------ types

MTypeEnv::MTypeEnv(const MProgram& p) {
  for (const auto* seg : {&p.imports, &p.data})
    for (const auto& d : *seg) {
      if (!d.type) continue;
      if (d.kind == "temp") {
        OperandParser op{d.name, 0, 0};
        temps_[op.parse().value] = *d.type;
      } else {
        names_[d.name] = *d.type;
      }
    }
}

DataType MTypeEnv::base_type(const MOperand& o) const {
  switch (o.kind) {
    case MOperandKind::Object: {
      auto it = names_.find(o.name);
      return it == names_.end() ? DataType::logic(1) : it->second;
    }
    case MOperandKind::Immed: {
      auto it = immeds_.find(o.value);
      return it == immeds_.end() ? DataType::logic(1) : it->second;
    }
    case MOperandKind::Temp: {
      auto it = temps_.find(o.value);
      return it == temps_.end() ? DataType::logic(1) : it->second;
    }
    case MOperandKind::Const: return DataType::integer(64);
    case MOperandKind::Alu: return DataType::logic(1);
  }
  return DataType::logic(1);
}

DataType MTypeEnv::type(const MOperand& o, std::optional<DataType> context) const {
  if (o.conv) return *o.conv;
  if (o.kind == MOperandKind::Const) return context.value_or(DataType::integer(64));
  if (o.lo >= 0) return DataType::logic(o.hi - o.lo + 1);
  return base_type(o);
}

std::pair<DataType, DataType> MTypeEnv::expr_types(const MInstr& i) const {
  if (i.ops.size() == 2) {
    DataType t = type(i.ops[1], type(i.ops[0]));
    return {t, t};
  }
  const MOperand& a = i.ops[1];
  const MOperand& b = i.ops[2];
  bool ca = a.kind == MOperandKind::Const && !a.conv;
  bool cb = b.kind == MOperandKind::Const && !b.conv;
  DataType ta = ca ? (cb ? type(i.ops[0]) : type(b)) : type(a);
  DataType tb = cb ? ta : type(b);
  return {ta, tb};
}

void MTypeEnv::define(const MInstr& i) {
  if (!i.is_data() || i.ops[0].kind != MOperandKind::Immed) return;
  DataType t;
  if (i.op == MOpcode::Move) {
    t = type(i.ops[1]);
  } else if (i.ops.size() == 2) {
    t = expr_types(i).first;
  } else {
    auto [ta, tb] = expr_types(i);
    t = binary_result_type(i.alu, ta, tb);
  }
  immeds_[i.ops[0].value] = t;
}

}  // namespace hls

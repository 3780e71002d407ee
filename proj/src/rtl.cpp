#include "hls/rtl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <regex>
#include <sstream>

namespace hls {

namespace {

std::string vtype(DataType t) {
  if (t.base == BaseType::Bool) return "std_logic";
  std::string range = "(" + std::to_string(t.width - 1) + " downto 0)";
  if (t.base == BaseType::Int) return "signed" + range;
  return "std_logic_vector" + range;
}

std::string bits_literal(uint64_t v, int w) {
  std::string s(static_cast<size_t>(w), '0');
  for (int i = 0; i < w && i < 64; ++i)
    if ((v >> i) & 1u) s[static_cast<size_t>(w - 1 - i)] = '1';
  return "\"" + s + "\"";
}

std::string literal(DataType t, int64_t v) {
  v = wrap(t, v);
  if (t.base == BaseType::Bool) return v ? "'1'" : "'0'";
  if (t.base == BaseType::Int) {
    if (v >= -(int64_t{1} << 31) && v < (int64_t{1} << 31))
      return "to_signed(" + std::to_string(v) + "," + std::to_string(t.width) + ")";
    return "signed'(" + bits_literal(static_cast<uint64_t>(v), t.width) + ")";
  }
  return bits_literal(static_cast<uint64_t>(v), t.width);
}

std::string zero(DataType t) { return literal(t, 0); }

bool logic_like(DataType t) { return t.base == BaseType::Logic || t.base == BaseType::Char; }

/// Re-types a VHDL value expression.
std::string adapt(const std::string& x, DataType from, DataType to) {
  if (from.base == BaseType::Char) from.base = BaseType::Logic;
  if (to.base == BaseType::Char) to.base = BaseType::Logic;
  if (from == to) return x;
  std::string w = std::to_string(to.width);
  if (from.base == BaseType::Bool) {
    if (to.base == BaseType::Int) return "B_to_I(" + x + "," + w + ")";
    return "B_to_L(" + x + "," + w + ")";
  }
  if (to.base == BaseType::Bool) return (from.base == BaseType::Int ? "I_to_B(" : "L_to_B(") + x + ")";
  if (from.base == BaseType::Int && to.base == BaseType::Int) return "resize(" + x + "," + w + ")";
  if (from.base == BaseType::Logic && to.base == BaseType::Logic) return "resize_l(" + x + "," + w + ")";
  if (from.base == BaseType::Int) {
    std::string c = "I_to_L(" + x + ")";
    return from.width == to.width ? c : "resize_l(" + c + "," + w + ")";
  }
  std::string c = "L_to_I(" + x + ")";
  return from.width == to.width ? c : "resize(" + c + "," + w + ")";
}

struct VExpr {
  std::string text;
  DataType type;
  bool boolean = false;  // VHDL boolean (relational result)

  std::string value(DataType to) const {
    if (boolean) return adapt("to_sl(" + text + ")", DataType::boolean(), to);
    return adapt(text, type, to);
  }
  std::string cond() const {
    if (boolean) return text;
    if (type.base == BaseType::Bool) return "(" + text + " = '1')";
    if (type.base == BaseType::Int) return "(" + text + " /= " + zero(type) + ")";
    return "(unsigned(" + text + ") /= 0)";
  }
};

std::string strip_parens(std::string s) {
  while (s.size() > 2 && s.front() == '(' && s.back() == ')') {
    int depth = 0;
    bool whole = true;
    for (size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '(') ++depth;
      if (s[i] == ')') --depth;
      if (depth == 0 && i + 1 < s.size()) {
        whole = false;
        break;
      }
    }
    if (!whole) break;
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

int sel_width(int size) { return ceil_log2(static_cast<uint64_t>(std::max(size, 2))) + 1; }

std::string const_name(DataType t, int64_t v) {
  v = wrap(t, v);
  std::string n = v < 0 ? "m" + std::to_string(-static_cast<__int128>(v) > INT64_MAX ? 0 : -v) : std::to_string(v);
  if (v == INT64_MIN) n = "min";
  return "CONST_" + type_suffix(t) + "_" + n;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string prefix_of(const Object& o) {
  switch (o.kind) {
    case ObjKind::Reg: return o.array_size > 0 ? "ARRAY" : "REG";
    case ObjKind::Sig: return "SIG";
    case ObjKind::Var:
    case ObjKind::RamBlock: return "RAM";
    case ObjKind::Queue: return "QUEUE";
    case ObjKind::Channel: return "CHAN";
    case ObjKind::Mutex: return "MUTEX";
    case ObjKind::Semaphore: return "SEMA";
    case ObjKind::Event: return "EVENT";
    case ObjKind::Barrier: return "BARRIER";
    case ObjKind::Timer: return "TIMER";
    case ObjKind::Process: return "PRO";
    default: return "OBJ";
  }
}

bool method_guard_style(ObjKind k) { return k != ObjKind::Process; }

/// Lowers one program to a state list and the ports and signals it needs.
class StateBuilder {
 public:
  StateBuilder(const TypedModule& m, const MProgram& p, const std::string& module) : m_(m), p_(p), env_(p) {
    r_.name = p.process;
    r_.entity = module + "_" + p.process;
    int pi = m.find_process(p.process);
    if (pi >= 0)
      for (int l : m.processes[static_cast<size_t>(pi)].locals) local_ids_[m.obj(l).name] = l;
  }

  RtlProcess build() {
    declare_locals();
    std::map<std::string, int> targets;
    auto states = program_states(p_, &targets);
    auto sname = [&](int idx) {
      if (idx >= static_cast<int>(states.size())) return "S_" + p_.process + "_end";
      return "S_" + states[static_cast<size_t>(idx)].label;
    };
    StateEntry start;
    start.name = "S_" + p_.process + "_start";
    start.next_state = sname(0);
    r_.states.push_back(start);
    for (size_t si = 0; si < states.size(); ++si) {
      const MState& ms = states[si];
      cur_ = StateEntry{};
      cur_.name = sname(static_cast<int>(si));
      cur_.next_state = sname(static_cast<int>(si) + 1);
      immeds_.clear();
      int first = ms.bind ? ms.first + 1 : ms.first;
      for (int k = first; k < ms.first + ms.count; ++k) {
        const MInstr& in = p_.code[static_cast<size_t>(k)];
        instr(in, [&](const std::string& l) {
          auto it = targets.find(l);
          if (it == targets.end()) throw InternalError("unresolved label " + l);
          return sname(it->second);
        });
        env_.define(in);
      }
      r_.states.push_back(std::move(cur_));
    }
    StateEntry end;
    end.name = "S_" + p_.process + "_end";
    end.next = NextKind::End;
    end.next_state = end.name;
    r_.states.push_back(end);
    port("PRO", p_.process, "ENABLE", false, DataType::boolean());
    port("PRO", p_.process, "END", true, DataType::boolean());
    return r_;
  }

 private:
  const TypedModule& m_;
  const MProgram& p_;
  MTypeEnv env_;
  RtlProcess r_;
  StateEntry cur_;
  std::map<std::string, int> local_ids_;
  std::map<int64_t, VExpr> immeds_;
  std::set<std::string> port_names_, const_names_;

  void declare_locals() {
    for (const auto& d : p_.data) {
      if (!d.type) continue;
      DataType t = *d.type;
      std::string name = d.kind == "temp" ? temp_name(d.name) : d.name;
      if (d.size > 0) {
        std::string ty = "ARRAY_" + name + "_TYPE";
        r_.types.push_back({ty, "array(0 to " + std::to_string(d.size - 1) + ") of " + vtype(t)});
        r_.signals.push_back({name, ty});
        r_.resets.push_back(name + " <= (others => " + (t.base == BaseType::Bool ? "'0'" : "(others => '0')") + ");");
      } else {
        r_.signals.push_back({name, vtype(t)});
        r_.resets.push_back(name + " <= " + zero(t) + ";");
      }
    }
  }

  static std::string temp_name(const std::string& decl) {
    auto lb = decl.find('[');
    auto rb = decl.find(']');
    return "TEMP_REG_" + decl.substr(lb + 1, rb - lb - 1);
  }

  bool is_local(const std::string& n) const { return local_ids_.count(n) > 0; }

  const Object& global(const std::string& n) const {
    int id = m_.find_object(n);
    if (id < 0) throw InternalError("unknown object " + n);
    return m_.obj(id);
  }

  std::string port(const std::string& prefix, const std::string& obj, const std::string& op, bool out, DataType t,
                   bool sel = false, int width = 1) {
    Port pt{prefix, obj, op, out, t, sel, width};
    std::string n = pt.name();
    if (port_names_.insert(n).second) r_.ports.push_back(pt);
    return n;
  }

  std::string constant(DataType t, int64_t v) {
    std::string n = const_name(t, v);
    if (const_names_.insert(n).second) r_.constants.push_back({n, vtype(t) + " := " + literal(t, v)});
    return n;
  }

  void out(StateData::Kind k, std::string text) {
    for (const auto& d : cur_.data)
      if (d.kind == k && d.text == text) return;
    cur_.data.push_back({k, std::move(text)});
  }

  void guard(const std::string& gd, bool method_style) {
    if (std::find(cur_.guards.begin(), cur_.guards.end(), gd) == cur_.guards.end()) cur_.guards.push_back(gd);
    if (method_style) cur_.method_guard = true;
  }

  // index expression as select vector
  std::string select(const MOperand& idx, int width) {
    VExpr v = read(idx, DataType::integer(64));
    return "(" + v.value(DataType::logic(width)) + ")";
  }

  VExpr read(const MOperand& o, std::optional<DataType> ctx) {
    DataType t = env_.type(o, ctx);
    VExpr v;
    switch (o.kind) {
      case MOperandKind::Const: return {constant(t, o.value), t, false};
      case MOperandKind::Immed: {
        auto it = immeds_.find(o.value);
        if (it == immeds_.end()) throw InternalError("immediate used before definition");
        v = it->second;
        break;
      }
      case MOperandKind::Temp: v = {"TEMP_REG_" + std::to_string(o.value), env_.base_type(o), false}; break;
      case MOperandKind::Alu: return {"'0'", DataType::boolean(), false};
      case MOperandKind::Object: v = read_object(o); break;
    }
    if (o.lo >= 0) {
      std::string base = v.type.base == BaseType::Bool ? "B_to_L(" + v.text + ",1)" : v.text;
      std::string slice = base + "(" + std::to_string(o.hi) + " downto " + std::to_string(o.lo) + ")";
      if (v.type.base == BaseType::Int) slice = "std_logic_vector(" + slice + ")";
      v = {slice, DataType::logic(o.hi - o.lo + 1), false};
    }
    if (o.conv) v = {v.value(*o.conv), *o.conv, false};
    return v;
  }

  VExpr read_object(const MOperand& o) {
    DataType bt = env_.base_type(o);
    if (is_local(o.name)) {
      if (o.index.empty()) return {o.name, bt, false};
      VExpr i = read(o.index[0], DataType::integer(64));
      std::string idx = i.type.base == BaseType::Int ? "to_integer(" + i.text + ")" : "to_integer(unsigned(" + i.value(DataType::logic(i.type.width)) + "))";
      return {o.name + "(" + idx + ")", bt, false};
    }
    const Object& g = global(o.name);
    std::string pf = prefix_of(g);
    switch (g.kind) {
      case ObjKind::Reg:
      case ObjKind::Sig:
        if (g.array_size > 0) {
          int w = sel_width(g.array_size);
          out(StateData::Kind::Out, port(pf, g.name, "SEL", true, g.type, true, w) + " <= " +
                                        select(o.index.empty() ? MOperand::constant(0) : o.index[0], w) + ";");
          return {port(pf, g.name, "RD", false, g.type), bt, false};
        }
        return {port(pf, g.name, "RD", false, g.type), bt, false};
      case ObjKind::Var: {
        const Object& blk = m_.obj(g.block);
        int w = sel_width(std::max(blk.cells, 2));
        std::string addr = o.index.empty() ? literal(DataType::logic(w), g.cell) : "std_logic_vector(unsigned(" + select(o.index[0], w) + ") + " + std::to_string(g.cell) + ")";
        out(StateData::Kind::Out, port("RAM", blk.name, "ADDR", true, DataType::logic(w), true, w) + " <= " + addr + ";");
        out(StateData::Kind::Out, port("RAM", blk.name, "RE", true, DataType::boolean()) + " <= '1';");
        guard(port("RAM", blk.name, "GD", false, DataType::boolean()), false);
        std::string rd = port("RAM", blk.name, "RD", false, blk.type);
        return {adapt(rd, blk.type, g.type), bt, false};
      }
      case ObjKind::Queue:
      case ObjKind::Channel:
        out(StateData::Kind::Out, port(pf, g.name, "RE", true, DataType::boolean()) + " <= '1';");
        guard(port(pf, g.name, "GD", false, DataType::boolean()), false);
        return {port(pf, g.name, "RD", false, g.type), bt, false};
      default: throw InternalError("object " + g.name + " is not readable");
    }
  }

  VExpr binary(Op op, VExpr a, DataType ta, VExpr b, DataType tb) {
    if (is_relational(op)) {
      std::string x = a.value(ta), y = b.value(ta);
      if (logic_like(ta)) {
        x = "unsigned(" + x + ")";
        y = "unsigned(" + y + ")";
      }
      std::string o = op == Op::Ne ? "/=" : op == Op::Eq ? "=" : std::string(op_text(op));
      return {"(" + x + " " + o + " " + y + ")", DataType::boolean(), true};
    }
    DataType r = binary_result_type(op, ta, tb);
    if (op == Op::Concat) {
      DataType la = DataType::logic(ta.width), lb = DataType::logic(tb.width);
      return {"(" + a.value(la) + " & " + b.value(lb) + ")", r, false};
    }
    std::string x = a.value(r), y = b.value(r);
    std::string w = std::to_string(r.width);
    bool lg = logic_like(r);
    auto arith = [&](const std::string& o) {
      if (lg) return "std_logic_vector(unsigned(" + x + ") " + o + " unsigned(" + y + "))";
      return "(" + x + " " + o + " " + y + ")";
    };
    switch (op) {
      case Op::Add: return {arith("+"), r, false};
      case Op::Sub: return {arith("-"), r, false};
      case Op::Mul:
        if (lg) return {"std_logic_vector(resize(unsigned(" + x + ") * unsigned(" + y + ")," + w + "))", r, false};
        return {"resize(" + x + " * " + y + "," + w + ")", r, false};
      case Op::Div: return {arith("/"), r, false};
      case Op::Mod: return {lg ? arith("mod") : "(" + x + " rem " + y + ")", r, false};
      case Op::Land:
      case Op::And: return {"(" + x + " and " + y + ")", r, false};
      case Op::Lor:
      case Op::Or: return {"(" + x + " or " + y + ")", r, false};
      case Op::Lxor:
      case Op::Xor: return {"(" + x + " xor " + y + ")", r, false};
      case Op::Lsl:
      case Op::Lsr: {
        std::string f = op == Op::Lsl ? "shift_left" : "shift_right";
        std::string amount = "to_integer(unsigned(" + b.value(DataType::logic(tb.width)) + "))";
        if (lg) return {"std_logic_vector(" + f + "(unsigned(" + x + ")," + amount + "))", r, false};
        if (op == Op::Lsr) return {"signed(shift_right(unsigned(" + x + ")," + amount + "))", r, false};
        return {f + "(" + x + "," + amount + ")", r, false};
      }
      case Op::Log: return {"log_b(" + x + "," + y + ")", r, false};
      default: break;
    }
    throw InternalError("unsupported operator " + std::string(op_text(op)));
  }

  VExpr unary(Op op, VExpr a, DataType t) {
    std::string x = a.value(t);
    if (op == Op::Neg) {
      if (logic_like(t)) return {"std_logic_vector(-signed(" + x + "))", t, false};
      return {"(-" + x + ")", t, false};
    }
    return {"(not " + x + ")", t, false};
  }

  static std::string to_alu(const VExpr& v, DataType t) {
    std::string x = v.value(t);
    if (t.base == BaseType::Int) return "resize(" + x + ",64)";
    if (t.base == BaseType::Bool) return "B_to_I(" + x + ",64)";
    return "L_to_I(resize_l(" + x + ",64))";
  }

  void alu_expr(const MInstr& in, const VExpr& a, DataType ta, const VExpr& b, DataType tb, bool un) {
    int k = in.unit;
    if (std::find(r_.alu_units.begin(), r_.alu_units.end(), k) == r_.alu_units.end()) r_.alu_units.push_back(k);
    std::string u = "ALU_" + std::to_string(k);
    out(StateData::Kind::Signal, u + "_A <= " + to_alu(a, ta) + ";");
    if (!un) out(StateData::Kind::Signal, u + "_B <= " + to_alu(b, is_relational(in.alu) ? ta : tb) + ";");
    out(StateData::Kind::Signal, u + "_OP <= " + std::to_string(static_cast<int>(in.alu)) + ";");
    out(StateData::Kind::Signal, u + "_SIGNED <= '" + std::string(ta.base == BaseType::Int ? "1" : "0") + "';");
  }

  template <typename Target>
  void instr(const MInstr& in, Target target) {
    switch (in.op) {
      case MOpcode::Move: {
        DataType dt = in.ops[0].kind == MOperandKind::Immed ? env_.type(in.ops[1]) : env_.type(in.ops[0]);
        VExpr v = read(in.ops[1], dt);
        write(in.ops[0], v);
        break;
      }
      case MOpcode::Expr: {
        auto [ta, tb] = env_.expr_types(in);
        bool un = in.ops.size() == 2;
        VExpr a = read(in.ops[1], ta);
        VExpr b = un ? VExpr{} : read(in.ops[2], tb);
        VExpr r;
        if (in.unit > 0) {
          alu_expr(in, a, ta, b, tb, un);
          DataType rt = un ? ta : binary_result_type(in.alu, ta, tb);
          std::string res = "ALU_" + std::to_string(in.unit) + "_RES";
          if (rt.base == BaseType::Bool) r = {res + "(0)", rt, false};
          else if (rt.base == BaseType::Int) r = {"resize(" + res + "," + std::to_string(rt.width) + ")", rt, false};
          else r = {"resize_l(I_to_L(" + res + ")," + std::to_string(rt.width) + ")", rt, false};
        } else {
          r = un ? unary(in.alu, a, ta) : binary(in.alu, a, ta, b, tb);
        }
        write(in.ops[0], r);
        break;
      }
      case MOpcode::Jump: cur_.next_state = target(in.target); break;
      case MOpcode::FalseJump: {
        VExpr c = read(in.ops[0], DataType::boolean());
        cur_.next = NextKind::Branch;
        cur_.cond = strip_parens(c.cond());
        cur_.else_state = target(in.target);
        break;
      }
      case MOpcode::Fun: fun(in); break;
      default: break;
    }
  }

  void write(const MOperand& d, const VExpr& v) {
    switch (d.kind) {
      case MOperandKind::Immed: immeds_[d.value] = v; return;
      case MOperandKind::Temp: {
        std::string n = "TEMP_REG_" + std::to_string(d.value);
        out(StateData::Kind::Trans, n + " <= " + v.value(env_.base_type(d)) + ";");
        return;
      }
      case MOperandKind::Object: break;
      default: return;
    }
    DataType bt = env_.base_type(d);
    if (is_local(d.name)) {
      std::string lhs = d.name;
      if (!d.index.empty()) {
        VExpr i = read(d.index[0], DataType::integer(64));
        lhs += i.type.base == BaseType::Int ? "(to_integer(" + i.text + "))"
                                            : "(to_integer(unsigned(" + i.value(DataType::logic(i.type.width)) + ")))";
      }
      if (d.lo >= 0) {
        DataType st = bt.base == BaseType::Int ? DataType::integer(d.hi - d.lo + 1) : DataType::logic(d.hi - d.lo + 1);
        if (bt.base == BaseType::Bool) {
          out(StateData::Kind::Trans, lhs + " <= " + v.value(DataType::boolean()) + ";");
          return;
        }
        out(StateData::Kind::Trans, lhs + "(" + std::to_string(d.hi) + " downto " + std::to_string(d.lo) + ") <= " + v.value(st) + ";");
        return;
      }
      out(StateData::Kind::Trans, lhs + " <= " + v.value(bt) + ";");
      return;
    }
    const Object& g = global(d.name);
    std::string pf = prefix_of(g);
    std::string val = v.value(g.type);
    if (d.lo >= 0) {
      std::string rd = port(pf, g.name, "RD", false, g.type);
      std::string sl = "(" + std::to_string(d.hi) + " downto " + std::to_string(d.lo) + ")";
      DataType st = g.type.base == BaseType::Int ? DataType::integer(d.hi - d.lo + 1) : DataType::logic(d.hi - d.lo + 1);
      if (g.kind == ObjKind::Reg || g.kind == ObjKind::Sig) {
        std::string wr = port(pf, g.name, "WR", true, g.type);
        out(StateData::Kind::Out, wr + " <= " + rd + ";");
        out(StateData::Kind::Out, wr + sl + " <= " + v.value(st) + ";");
        val.clear();
      }
    }
    switch (g.kind) {
      case ObjKind::Reg:
      case ObjKind::Sig: {
        std::string wr = port(pf, g.name, "WR", true, g.type);
        if (!val.empty()) out(StateData::Kind::Out, wr + " <= " + val + ";");
        out(StateData::Kind::Out, port(pf, g.name, "WE", true, DataType::boolean()) + " <= '1';");
        if (g.array_size > 0) {
          int w = sel_width(g.array_size);
          out(StateData::Kind::Out, port(pf, g.name, "SEL", true, g.type, true, w) + " <= " +
                                        select(d.index.empty() ? MOperand::constant(0) : d.index[0], w) + ";");
        }
        if (!function_interface(m_, g.id)) guard(port(pf, g.name, "GD", false, DataType::boolean()), false);
        return;
      }
      case ObjKind::Var: {
        const Object& blk = m_.obj(g.block);
        int w = sel_width(std::max(blk.cells, 2));
        std::string addr = d.index.empty() ? literal(DataType::logic(w), g.cell) : "std_logic_vector(unsigned(" + select(d.index[0], w) + ") + " + std::to_string(g.cell) + ")";
        out(StateData::Kind::Out, port("RAM", blk.name, "ADDR", true, DataType::logic(w), true, w) + " <= " + addr + ";");
        out(StateData::Kind::Out, port("RAM", blk.name, "WR", true, blk.type) + " <= " + v.value(blk.type) + ";");
        out(StateData::Kind::Out, port("RAM", blk.name, "WE", true, DataType::boolean()) + " <= '1';");
        guard(port("RAM", blk.name, "GD", false, DataType::boolean()), false);
        return;
      }
      case ObjKind::Queue:
      case ObjKind::Channel:
        out(StateData::Kind::Out, port(pf, g.name, "WR", true, g.type) + " <= " + val + ";");
        out(StateData::Kind::Out, port(pf, g.name, "WE", true, DataType::boolean()) + " <= '1';");
        guard(port(pf, g.name, "GD", false, DataType::boolean()), false);
        return;
      default: throw InternalError("object " + g.name + " is not writable");
    }
  }

  void fun(const MInstr& in) {
    const Object& g = global(in.ops[0].name);
    if (g.kind == ObjKind::Stub) {
      out(StateData::Kind::Out, "null;");
      return;
    }
    std::string pf = prefix_of(g);
    std::string op = upper(in.method);
    std::string gd = port(pf, g.name, "GD", false, DataType::boolean());
    std::string req = port(pf, g.name, op, true, DataType::boolean());
    bool mg = method_guard_style(g.kind);
    if (g.kind == ObjKind::Mutex || g.kind == ObjKind::Semaphore) out(StateData::Kind::Out, req + " <= " + gd + ";");
    else out(StateData::Kind::Out, req + " <= '1';");
    if (in.ops.size() > 1) {
      DataType at = g.kind == ObjKind::Semaphore || g.kind == ObjKind::Timer ? DataType::integer(32) : g.type;
      std::string arg = port(pf, g.name, op + "_ARG", true, at);
      out(StateData::Kind::Out, arg + " <= " + literal(at, in.ops[1].value) + ";");
    }
    guard(gd, mg);
  }
};

}  // namespace

std::string Port::name() const {
  if (object.empty()) return op;
  return prefix + "_" + object + "_" + op;
}

RtlProcess build_state_list(const TypedModule& m, const MProgram& p, const std::string& module) {
  return StateBuilder(m, p, module).build();
}

std::string state_list_text(const RtlProcess& r) {
  static const char* kinds[] = {"Data_in", "Data_out", "Data_trans", "Data_signal", "Data_cond",
                                "Data_top", "Data_top_def", "Data_def", "Data_def_trans"};
  std::ostringstream os;
  os << "process " << r.name << ": " << r.states.size() << " states\n";
  for (const auto& s : r.states) {
    os << "  " << s.name << "\n";
    if (!s.guards.empty()) {
      os << "    guard";
      for (const auto& g : s.guards) os << " " << g;
      os << "\n";
    }
    switch (s.next) {
      case NextKind::Next: os << "    next " << s.next_state << "\n"; break;
      case NextKind::Branch: os << "    branch " << s.cond << " ? " << s.next_state << " : " << s.else_state << "\n"; break;
      case NextKind::End: os << "    end\n"; break;
    }
    for (const auto& d : s.data) os << "    " << kinds[static_cast<int>(d.kind)] << " " << d.text << "\n";
  }
  return os.str();
}

// ------------------------------------------------------------- schedulers

std::vector<SchedulerSpec> build_schedulers(const TypedModule& m, const std::vector<MProgram>& programs) {
  std::map<int, SchedulerSpec> specs;
  for (size_t pi = 0; pi < programs.size(); ++pi) {
    const MProgram& p = programs[pi];
    std::set<std::string> locals;
    for (const auto& d : p.data) locals.insert(d.name);
    auto use = [&](const std::string& name, const std::string& op) {
      if (locals.count(name)) return;
      int id = m.find_object(name);
      if (id < 0) return;
      const Object& o = m.obj(id);
      if (o.kind == ObjKind::Var && o.block >= 0) id = o.block;
      SchedulerSpec& s = specs[id];
      s.object = id;
      s.name = m.obj(id).name;
      s.kind = m.obj(id).kind;
      s.policy = m.obj(id).policy;
      if (std::find(s.accessors.begin(), s.accessors.end(), p.process) == s.accessors.end())
        s.accessors.push_back(p.process);
      s.ops.insert(op);
    };
    std::function<void(const MOperand&)> reads = [&](const MOperand& o) {
      for (const auto& i : o.index) reads(i);
      if (o.kind == MOperandKind::Object) use(o.name, "read");
    };
    for (const auto& in : p.code) {
      if (in.op == MOpcode::Fun) {
        use(in.ops[0].name, in.method);
      } else if (in.is_data()) {
        for (size_t k = 1; k < in.ops.size(); ++k) reads(in.ops[k]);
        for (const auto& i : in.ops[0].index) reads(i);
        if (in.ops[0].kind == MOperandKind::Object) use(in.ops[0].name, "write");
      } else if (in.op == MOpcode::FalseJump) {
        reads(in.ops[0]);
      }
    }
  }
  std::vector<SchedulerSpec> out;
  for (auto& [id, s] : specs) {
    const Object& o = m.obj(id);
    if (o.kind == ObjKind::Stub) continue;
    bool storage = o.is_storage() || o.kind == ObjKind::RamBlock;
    if (storage && o.kind != ObjKind::RamBlock && (!s.ops.count("write") || function_interface(m, id))) continue;
    std::sort(s.accessors.begin(), s.accessors.end(),
              [&](const std::string& a, const std::string& b) { return m.find_process(a) < m.find_process(b); });
    out.push_back(s);
  }
  return out;
}

std::string scheduler_text(const SchedulerSpec& s) {
  std::string out = "scheduler " + s.name + " (" + std::string(obj_kind_name(s.kind)) + ", " +
                    (s.policy == SchedPolicy::Fifo ? "fifo" : "static") + "):";
  for (const auto& a : s.accessors) out += " " + a;
  out += " [";
  bool first = true;
  for (const auto& o : s.ops) {
    out += (first ? "" : ",") + o;
    first = false;
  }
  return out + "]";
}

// ------------------------------------------------------------------- VHDL

namespace {

class Writer {
 public:
  void line(const std::string& s) {
    os_ << std::string(static_cast<size_t>(indent_ * 2), ' ') << s << "\n";
  }
  void in() { ++indent_; }
  void out() { --indent_; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  int indent_ = 0;
};

const char* kHeader =
    "library IEEE;\n"
    "use IEEE.std_logic_1164.all;\n"
    "use IEEE.numeric_std.all;\n"
    "use work.conpro_support.all;\n";

std::string port_type(const Port& p) {
  if (p.sel) return "std_logic_vector(" + std::to_string(p.width - 1) + " downto 0)";
  return vtype(p.type);
}

std::vector<std::string> identifiers(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  bool quote = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '"') quote = !quote;
    if (quote) continue;
    if (c == '\'' && i + 2 < text.size() && text[i + 2] == '\'') {
      i += 2;
      continue;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      if (cur.empty() && std::isdigit(static_cast<unsigned char>(c))) {
        while (i + 1 < text.size() && std::isalnum(static_cast<unsigned char>(text[i + 1]))) ++i;
        continue;
      }
      cur += c;
    } else {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
      if (c == '\'') {
        while (i + 1 < text.size() && std::isalpha(static_cast<unsigned char>(text[i + 1]))) ++i;
      }
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string sensitivity(const std::string& body, const std::set<std::string>& readable, const std::string& first) {
  std::vector<std::string> list;
  if (!first.empty()) list.push_back(first);
  for (const auto& id : identifiers(body))
    if (readable.count(id) && std::find(list.begin(), list.end(), id) == list.end()) list.push_back(id);
  std::string s;
  for (const auto& x : list) s += (s.empty() ? "" : ", ") + x;
  return s;
}

std::string emit_process_entity(const RtlProcess& r) {
  Writer w;
  std::string head = kHeader;
  w.line("entity " + r.entity + " is");
  w.line("port(");
  w.in();
  w.line("-- Connections to external objects, components and the outside world");
  for (const auto& p : r.ports)
    w.line("signal " + p.name() + ": " + (p.out ? "out " : "in ") + port_type(p) + ";");
  w.line("signal conpro_system_clk: in std_logic;");
  w.line("signal conpro_system_reset: in std_logic");
  w.out();
  w.line(");");
  w.line("end " + r.entity + ";");
  w.line("architecture main of " + r.entity + " is");
  w.in();
  w.line("-- Local and temporary data objects");
  for (const auto& [n, t] : r.types) w.line("type " + n + " is " + t + ";");
  for (const auto& [n, t] : r.signals) w.line("signal " + n + ": " + t + ";");
  for (const auto& [n, t] : r.constants) w.line("constant " + n + ": " + t + ";");
  for (int k : r.alu_units) {
    std::string u = "ALU_" + std::to_string(k);
    w.line("signal " + u + "_A: signed(63 downto 0);");
    w.line("signal " + u + "_B: signed(63 downto 0);");
    w.line("signal " + u + "_OP: integer range 0 to 31;");
    w.line("signal " + u + "_SIGNED: std_logic;");
    w.line("signal " + u + "_RES: signed(63 downto 0);");
  }
  w.line("-- State Processing");
  w.line("type pro_states is (");
  w.in();
  for (size_t i = 0; i < r.states.size(); ++i) w.line(r.states[i].name + (i + 1 < r.states.size() ? "," : ""));
  w.out();
  w.line(");");
  w.line("signal pro_state: pro_states := " + r.states.front().name + ";");
  w.line("signal pro_state_next: pro_states := " + r.states.front().name + ";");
  w.out();
  w.line("begin");
  w.in();

  std::set<std::string> readable{"pro_state"};
  for (const auto& p : r.ports)
    if (!p.out) readable.insert(p.name());
  for (const auto& [n, t] : r.signals) readable.insert(n);
  for (int k : r.alu_units) {
    std::string u = "ALU_" + std::to_string(k);
    for (const char* s : {"_A", "_B", "_OP", "_SIGNED", "_RES"}) readable.insert(u + s);
  }
  std::string en = "PRO_" + r.name + "_ENABLE", end = "PRO_" + r.name + "_END";

  // state_transition
  w.line("state_transition: process(conpro_system_clk)");
  w.line("begin");
  w.in();
  w.line("if conpro_system_clk'event and conpro_system_clk='1' then");
  w.in();
  w.line("if conpro_system_reset='1' or " + en + "='0' then");
  w.in();
  w.line("pro_state <= " + r.states.front().name + ";");
  w.out();
  w.line("else");
  w.in();
  w.line("pro_state <= pro_state_next;");
  w.out();
  w.line("end if;");
  w.out();
  w.line("end if;");
  w.out();
  w.line("end process state_transition;");

  // control_path
  {
    Writer b;
    b.in();
    b.line(end + " <= '0';");
    b.line("case pro_state is");
    b.in();
    for (const auto& s : r.states) {
      b.line("when " + s.name + " =>");
      b.in();
      auto next = [&](Writer& x) {
        if (s.next == NextKind::Branch) {
          x.line("if " + s.cond + " then");
          x.in();
          x.line("pro_state_next <= " + s.next_state + ";");
          x.out();
          x.line("else");
          x.in();
          x.line("pro_state_next <= " + s.else_state + ";");
          x.out();
          x.line("end if;");
        } else {
          x.line("pro_state_next <= " + s.next_state + ";");
        }
      };
      if (s.next == NextKind::End) {
        b.line("pro_state_next <= " + s.name + ";");
        b.line(end + " <= '1';");
      } else if (!s.guards.empty()) {
        std::string c;
        for (const auto& g : s.guards) {
          std::string t = s.method_guard ? "not((" + g + ") = ('0'))" : g + " = '1'";
          c += (c.empty() ? "" : " or ") + t;
        }
        b.line("if " + c + " then");
        b.in();
        b.line("pro_state_next <= " + s.name + ";");
        b.out();
        b.line("else");
        b.in();
        next(b);
        b.out();
        b.line("end if;");
      } else {
        next(b);
      }
      b.out();
    }
    b.out();
    b.line("end case;");
    std::string body = b.str();
    w.line("-- Instruction Controlpath Block - The Leitwerk");
    w.line("control_path: process(" + sensitivity(body, readable, "pro_state") + ")");
    w.line("begin");
    std::istringstream is(body);
    for (std::string l; std::getline(is, l);) w.line(l);
    w.line("end process control_path;");
  }

  // data_path
  {
    std::vector<std::pair<std::string, std::string>> defaults;
    std::set<std::string> seen;
    for (const auto& s : r.states)
      for (const auto& d : s.data) {
        if (d.kind != StateData::Kind::Out && d.kind != StateData::Kind::Signal) continue;
        auto ids = identifiers(d.text);
        if (ids.empty()) continue;
        const std::string& lhs = ids.front();
        if (!seen.insert(lhs).second) continue;
        for (const auto& p : r.ports)
          if (p.name() == lhs) defaults.push_back({lhs, p.sel ? bits_literal(0, p.width) : zero(p.type)});
        for (int k : r.alu_units) {
          std::string u = "ALU_" + std::to_string(k);
          if (lhs == u + "_A" || lhs == u + "_B") defaults.push_back({lhs, "to_signed(0,64)"});
          if (lhs == u + "_OP") defaults.push_back({lhs, "0"});
          if (lhs == u + "_SIGNED") defaults.push_back({lhs, "'0'"});
        }
      }
    Writer b;
    b.in();
    b.line("-- Default values");
    for (const auto& [n, v] : defaults) b.line(n + " <= " + v + ";");
    b.line("case pro_state is");
    b.in();
    for (const auto& s : r.states) {
      b.line("when " + s.name + " =>");
      b.in();
      bool any = false;
      for (const auto& d : s.data)
        if (d.kind == StateData::Kind::Out || d.kind == StateData::Kind::Signal) {
          if (d.text != "null;") b.line(d.text);
          any = any || d.text != "null;";
        }
      if (!any) b.line("null;");
      b.out();
    }
    b.out();
    b.line("end case;");
    std::string body = b.str();
    w.line("-- Instruction Datapath Combinational Block");
    w.line("data_path: process(" + sensitivity(body, readable, "pro_state") + ")");
    w.line("begin");
    std::istringstream is(body);
    for (std::string l; std::getline(is, l);) w.line(l);
    w.line("end process data_path;");
  }

  // data_trans
  {
    w.line("-- Instruction Datapath Transitional Block");
    w.line("data_trans: process(conpro_system_clk)");
    w.line("begin");
    w.in();
    w.line("if conpro_system_clk'event and conpro_system_clk='1' then");
    w.in();
    w.line("if conpro_system_reset = '1' then");
    w.in();
    if (r.resets.empty()) w.line("null;");
    for (const auto& x : r.resets) w.line(x);
    w.out();
    w.line("else");
    w.in();
    w.line("case pro_state is");
    w.in();
    for (const auto& s : r.states) {
      w.line("when " + s.name + " =>");
      w.in();
      bool any = false;
      for (const auto& d : s.data)
        if (d.kind == StateData::Kind::Trans) {
          w.line(d.text);
          any = true;
        }
      if (!any) w.line("null;");
      w.out();
    }
    w.out();
    w.line("end case;");
    w.out();
    w.line("end if;");
    w.out();
    w.line("end if;");
    w.out();
    w.line("end process data_trans;");
  }

  // shared ALUs
  for (int k : r.alu_units) {
    std::string u = "ALU_" + std::to_string(k);
    w.line("-- Shared ALU " + std::to_string(k));
    w.line("alu_" + std::to_string(k) + ": process(" + u + "_A, " + u + "_B, " + u + "_OP, " + u + "_SIGNED)");
    w.line("begin");
    w.in();
    w.line(u + "_RES <= alu_eval(" + u + "_OP, " + u + "_SIGNED, " + u + "_A, " + u + "_B);");
    w.out();
    w.line("end process alu_" + std::to_string(k) + ";");
  }
  w.out();
  w.line("end architecture main;");
  return head + w.str();
}

/// Exported registers leave the top entity as bit vectors.
DataType out_type(DataType t) { return t.base == BaseType::Bool ? t : DataType::logic(t.width); }

std::string wire_name(const Port& p, const std::string& accessor) {
  if (p.prefix == "PRO" && p.object == accessor) return p.name();
  return p.prefix + "_" + p.object + "_" + accessor + "_" + p.op;
}

struct Request {
  std::string accessor;
  int index = 0;          // 1-based accessor number
  std::string op;         // port op
  std::string wire;       // request wire
  std::string gd;         // grant wire, empty if none
};

std::string port_wire(const std::vector<RtlProcess>& procs, const std::string& prefix, const std::string& object,
                      const std::string& accessor, const std::string& op) {
  for (const auto& r : procs) {
    if (r.name != accessor) continue;
    for (const auto& p : r.ports)
      if (p.prefix == prefix && p.object == object && p.op == op) return wire_name(p, r.name);
  }
  return "";
}

/// Ready condition of a request against the object state.
std::string ready_cond(const Object& o, const std::string& op) {
  std::string pf = prefix_of(o) + "_" + o.name;
  switch (o.kind) {
    case ObjKind::Semaphore:
      if (op == "DOWN") return pf + "_CNT > 0";
      if (op == "UP" || op == "UNLOCK") return pf + "_CNT < " + std::to_string(std::max(o.depth, 1));
      return "true";
    case ObjKind::Mutex: return op == "LOCK" ? pf + "_LOCKED = '0'" : "true";
    case ObjKind::Queue:
    case ObjKind::Channel: {
      int depth = o.kind == ObjKind::Channel ? 1 : std::max(o.depth, 1);
      if (op == "RE") return pf + "_CNT > 0";
      if (op == "WE") return pf + "_CNT < " + std::to_string(depth);
      return "true";
    }
    case ObjKind::Event: return op == "AWAIT" ? pf + "_FLAG = '1'" : "true";
    case ObjKind::Barrier: return op == "AWAIT" ? pf + "_CNT >= " + std::to_string(std::max(o.group - 1, 0)) : "true";
    case ObjKind::Timer: return op == "AWAIT" ? pf + "_FIRE = '1'" : "true";
    default: return "true";
  }
}

std::vector<Request> requests(const TypedModule& m, const SchedulerSpec& s, const std::vector<RtlProcess>& procs) {
  const Object& o = m.obj(s.object);
  std::string pf = prefix_of(o);
  std::vector<Request> out;
  for (size_t i = 0; i < s.accessors.size(); ++i) {
    const std::string& a = s.accessors[i];
    for (const auto& r : procs) {
      if (r.name != a) continue;
      for (const auto& p : r.ports) {
        if (p.prefix != pf || p.object != o.name || !p.out || p.sel) continue;
        if (p.op == "WR" || p.op == "END" || (p.op.size() > 4 && p.op.substr(p.op.size() - 4) == "_ARG")) continue;
        out.push_back({a, static_cast<int>(i) + 1, p.op, wire_name(p, a), port_wire(procs, pf, o.name, a, "GD")});
      }
    }
  }
  return out;
}

/// State update performed when a request of `proc` is granted.
std::string grant_action(const TypedModule& m, const Object& o, const std::vector<RtlProcess>& procs,
                         const std::string& proc, const std::string& op) {
  std::string pf = prefix_of(o);
  std::string base = pf + "_" + o.name;
  auto wire = [&](const std::string& x) { return port_wire(procs, pf, o.name, proc, x); };
  switch (o.kind) {
    case ObjKind::Reg:
    case ObjKind::Sig:
    case ObjKind::RamBlock: {
      if (op != "WE") return "";
      std::string tgt = base;
      if (o.array_size > 0 || o.kind == ObjKind::RamBlock) {
        int size = o.kind == ObjKind::RamBlock ? std::max(o.cells, 1) : o.array_size;
        std::string sel = wire(o.kind == ObjKind::RamBlock ? "ADDR" : "SEL");
        tgt += "(to_integer(unsigned(" + sel + ")) mod " + std::to_string(size) + ")";
      }
      return tgt + " <= " + wire("WR") + ";";
    }
    case ObjKind::Semaphore:
      if (op == "DOWN") return base + "_CNT <= " + base + "_CNT - 1;";
      if (op == "UP" || op == "UNLOCK") return base + "_CNT <= " + base + "_CNT + 1;";
      if (op == "INIT") {
        std::string arg = wire("INIT_ARG");
        return base + "_CNT <= " + (arg.empty() ? std::to_string(o.init) : "to_integer(" + arg + ")") + ";";
      }
      return "";
    case ObjKind::Mutex:
      if (op == "LOCK") return base + "_LOCKED <= '1';";
      if (op == "UNLOCK") return base + "_LOCKED <= '0';";
      return "";
    case ObjKind::Queue:
    case ObjKind::Channel: {
      int depth = o.kind == ObjKind::Channel ? 1 : std::max(o.depth, 1);
      if (op == "WE")
        return base + "_BUF(" + base + "_CNT mod " + std::to_string(depth) + ") <= " + wire("WR") + "; " + base +
               "_CNT <= " + base + "_CNT + 1;";
      if (op == "RE") {
        std::string shift = depth > 1 ? base + "_BUF(0 to " + std::to_string(depth - 2) + ") <= " + base + "_BUF(1 to " +
                                            std::to_string(depth - 1) + "); "
                                      : "";
        return shift + base + "_CNT <= " + base + "_CNT - 1;";
      }
      return "";
    }
    case ObjKind::Event:
      if (op == "WAKEUP") return base + "_FLAG <= '1';";
      if (op == "INIT") return base + "_FLAG <= '0';";
      if (op == "AWAIT" && o.latched) return base + "_FLAG <= '0';";
      return "";
    case ObjKind::Barrier:
      if (op == "AWAIT")
        return "if " + base + "_CNT >= " + std::to_string(std::max(o.group - 1, 0)) + " then " + base + "_CNT <= 0; else " +
               base + "_CNT <= " + base + "_CNT + 1; end if;";
      return "";
    case ObjKind::Timer:
      if (op == "START") return base + "_RUN <= '1'; " + base + "_CNT <= " + std::to_string(o.interval) + ";";
      if (op == "STOP" || op == "INIT") return base + "_RUN <= '0';";
      return "";
    default: return "";
  }
}

/// Clocked object process: registered grants in scheduler order plus the
/// object state they update.
void emit_object(Writer& w, const TypedModule& m, const Object& o, const std::vector<RtlProcess>& procs,
                 const SchedulerSpec* s) {
  std::string pf = prefix_of(o);
  std::string base = pf + "_" + o.name;
  std::vector<Request> reqs;
  if (s) {
    reqs = requests(m, *s, procs);
  } else {
    SchedulerSpec tmp;
    tmp.object = o.id;
    tmp.name = o.name;
    for (const auto& r : procs)
      for (const auto& p : r.ports)
        if (p.prefix == pf && p.object == o.name && p.out &&
            std::find(tmp.accessors.begin(), tmp.accessors.end(), r.name) == tmp.accessors.end())
          tmp.accessors.push_back(r.name);
    reqs = requests(m, tmp, procs);
  }
  if (reqs.empty() && o.kind != ObjKind::Timer) return;
  std::string reset;
  switch (o.kind) {
    case ObjKind::Reg:
    case ObjKind::Sig:
    case ObjKind::RamBlock: {
      bool arr = o.array_size > 0 || o.kind == ObjKind::RamBlock;
      reset = arr ? base + " <= (others => " + (o.type.base == BaseType::Bool ? std::string("'0'") : "(others => '0')") + ");"
                  : base + " <= " + zero(o.type) + ";";
      break;
    }
    case ObjKind::Semaphore: reset = base + "_CNT <= " + std::to_string(o.init) + ";"; break;
    case ObjKind::Mutex: reset = base + "_LOCKED <= '0';"; break;
    case ObjKind::Queue:
    case ObjKind::Channel:
    case ObjKind::Barrier: reset = base + "_CNT <= 0;"; break;
    case ObjKind::Event: reset = base + "_FLAG <= '0';"; break;
    case ObjKind::Timer:
      reset = base + "_RUN <= '0'; " + base + "_CNT <= " + std::to_string(o.interval) + "; " + base + "_FIRE <= '0';";
      break;
    default: return;
  }
  bool fifo = s && s->policy == SchedPolicy::Fifo;
  std::vector<std::string> gds;
  for (const auto& r : reqs)
    if (!r.gd.empty() && std::find(gds.begin(), gds.end(), r.gd) == gds.end()) gds.push_back(r.gd);

  w.line("-- " + o.name + (s ? (fifo ? ": fifo scheduler" : ": static priority scheduler") : ""));
  w.line(base + "_SCHED: process(CLK)");
  w.line("begin");
  w.in();
  w.line("if CLK'event and CLK='1' then");
  w.in();
  w.line("if RESET='1' then");
  w.in();
  w.line(reset);
  for (const auto& g : gds) w.line(g + " <= '1';");
  w.out();
  w.line("else");
  w.in();
  for (const auto& g : gds) w.line(g + " <= '1';");
  struct Arm {
    std::string cond, body;
  };
  std::vector<Arm> arms;
  auto cond_of = [&](const Request& r) {
    std::string c = r.wire + " = '1'";
    std::string rd = ready_cond(o, r.op);
    if (rd != "true") c += " and " + rd;
    return c;
  };
  auto body_of = [&](const Request& r) {
    std::string b = r.gd + " <= '0';";
    std::string a = grant_action(m, o, procs, r.accessor, r.op);
    return a.empty() ? b : b + " " + a;
  };
  if (fifo)
    for (const auto& r : reqs)
      if (!r.gd.empty())
        arms.push_back({"FIFO_" + o.name + "_LEN > 0 and FIFO_" + o.name + "_Q(0) = " + std::to_string(r.index) + " and " + cond_of(r),
                        body_of(r)});
  for (const auto& r : reqs)
    if (!r.gd.empty()) arms.push_back({(fifo ? "FIFO_" + o.name + "_LEN = 0 and " : std::string()) + cond_of(r), body_of(r)});
  for (size_t i = 0; i < arms.size(); ++i) {
    w.line((i == 0 ? "if " : "elsif ") + arms[i].cond + " then");
    w.in();
    w.line(arms[i].body);
    w.out();
  }
  if (!arms.empty()) w.line("end if;");
  // unguarded requests
  for (const auto& r : reqs) {
    if (!r.gd.empty()) continue;
    std::string a = grant_action(m, o, procs, r.accessor, r.op);
    if (a.empty()) continue;
    w.line("if " + r.wire + " = '1' then");
    w.in();
    w.line(a);
    w.out();
    w.line("end if;");
  }
  if (o.kind == ObjKind::Timer) {
    w.line("if " + base + "_RUN = '1' and " + base + "_CNT = 0 then");
    w.in();
    w.line(base + "_FIRE <= '1'; " + base + "_CNT <= " + std::to_string(o.interval) + "; " + base + "_RUN <= " +
           (o.timer_mode == 0 ? "'1'" : "'0'") + ";");
    w.out();
    w.line("elsif " + base + "_RUN = '1' then");
    w.in();
    w.line(base + "_FIRE <= '0'; " + base + "_CNT <= " + base + "_CNT - 1;");
    w.out();
    w.line("end if;");
  }
  w.out();
  w.line("end if;");
  w.out();
  w.line("end if;");
  w.out();
  w.line("end process " + base + "_SCHED;");

  if (fifo) {
    int n = static_cast<int>(s->accessors.size());
    std::string q = "FIFO_" + o.name;
    w.line(q + "_UPDATE: process(CLK)");
    w.line("variable q: " + q + "_TYPE;");
    w.line("variable n: integer range 0 to " + std::to_string(n) + ";");
    w.line("variable found: boolean;");
    w.line("begin");
    w.in();
    w.line("if CLK'event and CLK='1' then");
    w.in();
    w.line("if RESET='1' then");
    w.in();
    w.line(q + "_LEN <= 0;");
    w.out();
    w.line("else");
    w.in();
    w.line("q := " + q + "_Q;");
    w.line("n := " + q + "_LEN;");
    std::string head;
    for (const auto& r : reqs)
      if (!r.gd.empty())
        head += (head.empty() ? "" : " or ") + std::string("(") + r.gd + " = '0' and q(0) = " + std::to_string(r.index) + ")";
    if (!head.empty()) {
      w.line("if n > 0 and (" + head + ") then");
      w.in();
      if (n > 1) w.line("q(0 to " + std::to_string(n - 2) + ") := q(1 to " + std::to_string(n - 1) + ");");
      w.line("n := n - 1;");
      w.out();
      w.line("end if;");
    }
    for (const auto& r : reqs) {
      if (r.gd.empty()) continue;
      w.line("if " + r.wire + " = '1' and " + r.gd + " = '1' then");
      w.in();
      w.line("found := false;");
      w.line("for i in 0 to " + std::to_string(n - 1) + " loop");
      w.in();
      w.line("if i < n and q(i) = " + std::to_string(r.index) + " then");
      w.in();
      w.line("found := true;");
      w.out();
      w.line("end if;");
      w.out();
      w.line("end loop;");
      w.line("if not found and n < " + std::to_string(n) + " then");
      w.in();
      w.line("q(n) := " + std::to_string(r.index) + ";");
      w.line("n := n + 1;");
      w.out();
      w.line("end if;");
      w.out();
      w.line("end if;");
    }
    w.line(q + "_Q <= q;");
    w.line(q + "_LEN <= n;");
    w.out();
    w.line("end if;");
    w.out();
    w.line("end if;");
    w.out();
    w.line("end process " + q + "_UPDATE;");
  }
}

std::string emit_top(const TypedModule& m, const std::vector<RtlProcess>& procs, const std::vector<SchedulerSpec>& scheds,
                     const std::string& module) {
  Writer w;
  std::string ent = "MOD_" + module;
  std::vector<int> exported;
  for (const auto& o : m.objects)
    if (o.global && o.exported && o.is_storage() && !o.dead) exported.push_back(o.id);
  w.line("entity " + ent + " is");
  w.line("port(");
  w.in();
  w.line("-- Connections to the outside world");
  for (int id : exported) {
    const Object& o = m.obj(id);
    if (o.array_size > 0) continue;
    w.line("signal " + o.name + "_RD: out " + vtype(out_type(o.type)) + ";");
  }
  w.line("signal CLK: in std_logic;");
  w.line("signal RESET: in std_logic");
  w.out();
  w.line(");");
  w.line("end " + ent + ";");
  w.line("architecture main of " + ent + " is");
  w.in();
  w.line("-- Process instances");
  for (const auto& r : procs) {
    w.line("component " + r.entity);
    w.line("port(");
    w.in();
    for (const auto& p : r.ports) w.line("signal " + p.name() + ": " + (p.out ? "out " : "in ") + port_type(p) + ";");
    w.line("signal conpro_system_clk: in std_logic;");
    w.line("signal conpro_system_reset: in std_logic");
    w.out();
    w.line(");");
    w.line("end component;");
  }

  // object storage
  std::set<std::string> declared;
  auto sig = [&](const std::string& n, const std::string& t) {
    if (declared.insert(n).second) w.line("signal " + n + ": " + t + ";");
  };
  for (const auto& o : m.objects) {
    if (!o.global || o.dead) continue;
    switch (o.kind) {
      case ObjKind::Reg:
      case ObjKind::Sig:
        if (o.array_size > 0) {
          w.line("type ARRAY_" + o.name + "_TYPE is array(0 to " + std::to_string(o.array_size - 1) + ") of " + vtype(o.type) + ";");
          sig("ARRAY_" + o.name, "ARRAY_" + o.name + "_TYPE");
        } else {
          sig(prefix_of(o) + "_" + o.name, vtype(o.type));
        }
        break;
      case ObjKind::RamBlock:
        w.line("type RAM_" + o.name + "_TYPE is array(0 to " + std::to_string(std::max(o.cells, 1) - 1) + ") of " + vtype(o.type) + ";");
        sig("RAM_" + o.name, "RAM_" + o.name + "_TYPE");
        break;
      case ObjKind::Queue:
      case ObjKind::Channel: {
        int depth = o.kind == ObjKind::Channel ? 1 : std::max(o.depth, 1);
        w.line("type " + prefix_of(o) + "_" + o.name + "_TYPE is array(0 to " + std::to_string(depth - 1) + ") of " + vtype(o.type) + ";");
        sig(prefix_of(o) + "_" + o.name + "_BUF", prefix_of(o) + "_" + o.name + "_TYPE");
        sig(prefix_of(o) + "_" + o.name + "_CNT", "integer range 0 to " + std::to_string(depth));
        break;
      }
      case ObjKind::Semaphore: sig("SEMA_" + o.name + "_CNT", "integer range 0 to " + std::to_string(std::max(o.depth, 1))); break;
      case ObjKind::Mutex: sig("MUTEX_" + o.name + "_LOCKED", "std_logic"); break;
      case ObjKind::Event: sig("EVENT_" + o.name + "_FLAG", "std_logic"); break;
      case ObjKind::Barrier: sig("BARRIER_" + o.name + "_CNT", "integer range 0 to 255"); break;
      case ObjKind::Timer:
        sig("TIMER_" + o.name + "_CNT", "integer");
        sig("TIMER_" + o.name + "_RUN", "std_logic");
        sig("TIMER_" + o.name + "_FIRE", "std_logic");
        break;
      default: break;
    }
  }
  // wires
  for (const auto& r : procs)
    for (const auto& p : r.ports) sig(wire_name(p, r.name), port_type(p));
  for (const auto& r : procs) sig("PRO_" + r.name + "_ENABLE", "std_logic");
  for (const auto& s : scheds)
    if (s.policy == SchedPolicy::Fifo) {
      w.line("type FIFO_" + s.name + "_TYPE is array(0 to " + std::to_string(s.accessors.size() - 1) + ") of integer range 0 to " +
             std::to_string(s.accessors.size()) + ";");
      sig("FIFO_" + s.name + "_Q", "FIFO_" + s.name + "_TYPE");
      sig("FIFO_" + s.name + "_LEN", "integer range 0 to " + std::to_string(s.accessors.size()));
    }
  w.out();
  w.line("begin");
  w.in();

  // instances
  for (const auto& r : procs) {
    w.line(r.entity + "_inst: " + r.entity + " port map(");
    w.in();
    for (const auto& p : r.ports) w.line(p.name() + " => " + wire_name(p, r.name) + ",");
    w.line("conpro_system_clk => CLK,");
    w.line("conpro_system_reset => RESET");
    w.out();
    w.line(");");
  }
  for (int id : exported) {
    const Object& o = m.obj(id);
    if (o.array_size > 0) continue;
    w.line(o.name + "_RD <= " + adapt(prefix_of(o) + "_" + o.name, o.type, out_type(o.type)) + ";");
  }

  // read wires of shared storage
  for (const auto& r : procs)
    for (const auto& p : r.ports) {
      if (p.out || p.op != "RD") continue;
      int id = m.find_object(p.object);
      if (id < 0) continue;
      const Object& o = m.obj(id);
      std::string wn = wire_name(p, r.name);
      if (p.prefix == "ARRAY") {
        std::string sel = p.prefix + "_" + p.object + "_" + r.name + "_SEL";
        w.line(wn + " <= ARRAY_" + o.name + "(to_integer(unsigned(" + sel + ")) mod " + std::to_string(o.array_size) + ");");
      } else if (p.prefix == "REG" || p.prefix == "SIG") {
        w.line(wn + " <= " + p.prefix + "_" + o.name + ";");
      } else if (p.prefix == "RAM") {
        std::string addr = "RAM_" + p.object + "_" + r.name + "_ADDR";
        w.line(wn + " <= RAM_" + o.name + "(to_integer(unsigned(" + addr + ")) mod " + std::to_string(std::max(o.cells, 1)) + ");");
      } else if (p.prefix == "QUEUE" || p.prefix == "CHAN") {
        w.line(wn + " <= " + p.prefix + "_" + o.name + "_BUF(0);");
      }
    }

  // schedulers and object behaviour
  for (const auto& o : m.objects) {
    if (!o.global || o.dead || o.kind == ObjKind::Process) continue;
    const SchedulerSpec* spec = nullptr;
    for (const auto& s : scheds)
      if (s.object == o.id) spec = &s;
    emit_object(w, m, o, procs, spec);
  }

  // process control
  for (const auto& r : procs) {
    std::string en = "PRO_" + r.name + "_ENABLE";
    std::vector<std::string> starts, stops;
    for (const auto& q : procs)
      for (const auto& p : q.ports)
        if (p.prefix == "PRO" && p.object == r.name && p.out) {
          if (p.op == "START" || p.op == "CALL") starts.push_back(wire_name(p, q.name));
          if (p.op == "STOP") stops.push_back(wire_name(p, q.name));
        }
    w.line("PRO_" + r.name + "_CONTROL: process(CLK)");
    w.line("begin");
    w.in();
    w.line("if CLK'event and CLK='1' then");
    w.in();
    w.line("if RESET='1' then");
    w.in();
    w.line(en + " <= " + std::string(r.name == "main" ? "'1'" : "'0'") + ";");
    w.out();
    for (const auto& x : stops) {
      w.line("elsif " + x + " = '1' then");
      w.in();
      w.line(en + " <= '0';");
      w.out();
    }
    for (const auto& x : starts) {
      w.line("elsif " + x + " = '1' and " + en + " = '0' then");
      w.in();
      w.line(en + " <= '1';");
      w.out();
    }
    w.line("elsif PRO_" + r.name + "_END = '1' then");
    w.in();
    w.line(en + " <= '0';");
    w.out();
    w.line("end if;");
    w.out();
    w.line("end if;");
    w.out();
    w.line("end process PRO_" + r.name + "_CONTROL;");
    for (const auto& q : procs) {
      if (q.name == r.name) continue;
      std::string gd = port_wire(procs, "PRO", r.name, q.name, "GD");
      if (gd.empty()) continue;
      std::string c;
      auto arm = [&](const std::string& op, const std::string& done) {
        std::string x = port_wire(procs, "PRO", r.name, q.name, op);
        if (!x.empty()) c += (c.empty() ? "" : " or ") + std::string("(") + x + " = '1' and " + done + ")";
      };
      arm("CALL", "PRO_" + r.name + "_END = '1'");
      arm("START", en + " = '1'");
      arm("STOP", en + " = '0'");
      w.line(gd + " <= '0' when " + (c.empty() ? "true" : c) + " else '1';");
    }
  }
  w.out();
  w.line("end architecture main;");
  return std::string(kHeader) + w.str();
}

}  // namespace

}  // namespace hls

namespace hls {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void check_collisions(const RtlProcess& r) {
  std::map<std::string, std::string> seen;
  auto add = [&](const std::string& n) {
    auto [it, fresh] = seen.emplace(lower(n), n);
    if (!fresh) throw std::runtime_error("name collision in " + r.entity + ": " + it->second + " and " + n);
  };
  for (const auto& p : r.ports) add(p.name());
  for (const auto& [n, t] : r.signals) add(n);
  for (const auto& [n, t] : r.constants) add(n);
  for (const auto& [n, t] : r.types) add(n);
  for (const auto& s : r.states) add(s.name);
}

}  // namespace

VhdlDesign emit_vhdl(const TypedModule& m, const std::vector<MProgram>& programs, const std::string& module) {
  std::vector<RtlProcess> procs;
  for (const auto& p : programs) {
    procs.push_back(build_state_list(m, p, module));
    check_collisions(procs.back());
  }
  std::map<std::string, std::string> entities;
  for (const auto& r : procs) {
    auto [it, fresh] = entities.emplace(lower(r.entity), r.entity);
    if (!fresh) throw std::runtime_error("name collision: entity " + r.entity);
  }
  auto scheds = build_schedulers(m, programs);
  VhdlDesign d;
  d.files.push_back({"conpro_support.vhdl", support_package()});
  for (const auto& r : procs) d.files.push_back({r.entity + ".vhdl", emit_process_entity(r)});
  d.files.push_back({module + ".vhdl", emit_top(m, procs, scheds, module)});
  d.manifest = "# synthesis manifest: files in dependency order\n";
  d.manifest += "top MOD_" + module + "\n";
  for (const auto& f : d.files) d.manifest += "vhdl " + f.name + "\n";
  return d;
}

std::string support_package() {
  return R"(library IEEE;
use IEEE.std_logic_1164.all;
use IEEE.numeric_std.all;

package conpro_support is
  function I_to_L(x: signed) return std_logic_vector;
  function L_to_I(x: std_logic_vector) return signed;
  function B_to_I(x: std_logic; w: natural) return signed;
  function B_to_L(x: std_logic; w: natural) return std_logic_vector;
  function I_to_B(x: signed) return std_logic;
  function L_to_B(x: std_logic_vector) return std_logic;
  function resize_l(x: std_logic_vector; w: natural) return std_logic_vector;
  function to_sl(x: boolean) return std_logic;
  function log_b(x: signed; b: signed) return signed;
  function log_b(x: std_logic_vector; b: std_logic_vector) return std_logic_vector;
  function alu_eval(op: integer; sgn: std_logic; a: signed; b: signed) return signed;
end package conpro_support;

package body conpro_support is
  function I_to_L(x: signed) return std_logic_vector is
  begin
    return std_logic_vector(x);
  end function I_to_L;

  function L_to_I(x: std_logic_vector) return signed is
  begin
    return signed(x);
  end function L_to_I;

  function B_to_I(x: std_logic; w: natural) return signed is
    variable r: signed(w - 1 downto 0) := (others => '0');
  begin
    r(0) := x;
    return r;
  end function B_to_I;

  function B_to_L(x: std_logic; w: natural) return std_logic_vector is
    variable r: std_logic_vector(w - 1 downto 0) := (others => '0');
  begin
    r(0) := x;
    return r;
  end function B_to_L;

  function I_to_B(x: signed) return std_logic is
  begin
    return x(x'low);
  end function I_to_B;

  function L_to_B(x: std_logic_vector) return std_logic is
  begin
    return x(x'low);
  end function L_to_B;

  function resize_l(x: std_logic_vector; w: natural) return std_logic_vector is
  begin
    return std_logic_vector(resize(unsigned(x), w));
  end function resize_l;

  function to_sl(x: boolean) return std_logic is
  begin
    if x then
      return '1';
    else
      return '0';
    end if;
  end function to_sl;

  function log_b(x: signed; b: signed) return signed is
    variable p: integer := 1;
    variable n: integer := 0;
  begin
    if x <= 1 or b <= 1 then
      return to_signed(0, x'length);
    end if;
    while p < to_integer(x) loop
      p := p * to_integer(b);
      n := n + 1;
    end loop;
    return to_signed(n, x'length);
  end function log_b;

  function log_b(x: std_logic_vector; b: std_logic_vector) return std_logic_vector is
  begin
    return std_logic_vector(log_b(signed('0' & x), signed('0' & b))(x'length - 1 downto 0));
  end function log_b;

  function alu_eval(op: integer; sgn: std_logic; a: signed; b: signed) return signed is
    variable r: signed(63 downto 0) := (others => '0');
  begin
    case op is
      when 0 => r := a + b;
      when 1 => r := a - b;
      when 2 => r := resize(a * b, 64);
      when 3 =>
        if b /= 0 then
          if sgn = '1' then
            r := a / b;
          else
            r := signed(unsigned(a) / unsigned(b));
          end if;
        end if;
      when 4 =>
        if b /= 0 then
          if sgn = '1' then
            r := a rem b;
          else
            r := signed(unsigned(a) mod unsigned(b));
          end if;
        end if;
      when 5 => r := a and b;
      when 6 => r := a or b;
      when 7 => r := a xor b;
      when 8 => r := shift_left(a, to_integer(unsigned(b(5 downto 0))));
      when 9 => r := signed(shift_right(unsigned(a), to_integer(unsigned(b(5 downto 0)))));
      when 10 =>
        if (sgn = '1' and a < b) or (sgn = '0' and unsigned(a) < unsigned(b)) then
          r(0) := '1';
        end if;
      when 11 =>
        if (sgn = '1' and a <= b) or (sgn = '0' and unsigned(a) <= unsigned(b)) then
          r(0) := '1';
        end if;
      when 12 =>
        if (sgn = '1' and a > b) or (sgn = '0' and unsigned(a) > unsigned(b)) then
          r(0) := '1';
        end if;
      when 13 =>
        if (sgn = '1' and a >= b) or (sgn = '0' and unsigned(a) >= unsigned(b)) then
          r(0) := '1';
        end if;
      when 14 =>
        if a = b then
          r(0) := '1';
        end if;
      when 15 =>
        if a /= b then
          r(0) := '1';
        end if;
      when 16 => r(0) := a(0) and b(0);
      when 17 => r(0) := a(0) or b(0);
      when 18 => r(0) := a(0) xor b(0);
      when 21 => r := -a;
      when 22 => r := not a;
      when 23 => r(0) := not a(0);
      when others => r := a;
    end case;
    return r;
  end function alu_eval;
end package body conpro_support;
)";
}

// -------------------------------------------------------------- validator

namespace {

const std::set<std::string>& vhdl_words() {
  static const std::set<std::string> w{
      "library", "use", "all", "ieee", "std_logic_1164", "numeric_std", "work", "conpro_support", "entity", "is",
      "port", "signal", "in", "out", "inout", "end", "architecture", "of", "begin", "process", "if", "then", "else",
      "elsif", "case", "when", "others", "null", "and", "or", "xor", "not", "nand", "nor", "mod", "rem", "downto",
      "to", "type", "array", "constant", "variable", "component", "map", "loop", "for", "while", "return",
      "function", "package", "body", "range", "integer", "natural", "boolean", "true", "false", "std_logic",
      "std_logic_vector", "signed", "unsigned", "to_signed", "to_unsigned", "to_integer", "resize", "shift_left",
      "shift_right", "event", "length", "low", "high", "I_to_L", "L_to_I", "B_to_I", "B_to_L", "I_to_B", "L_to_B",
      "resize_l", "to_sl", "log_b", "alu_eval", "main", "sll", "srl", "abs"};
  return w;
}

}  // namespace

std::vector<std::string> validate_vhdl(const VhdlFile& f) {
  std::vector<std::string> problems;
  // strip comments
  std::string text;
  {
    std::istringstream is(f.text);
    for (std::string l; std::getline(is, l);) {
      auto c = l.find("--");
      text += (c == std::string::npos ? l : l.substr(0, c)) + "\n";
    }
  }
  std::vector<std::string> toks = identifiers(text);
  std::vector<std::string> low;
  for (const auto& t : toks) low.push_back(lower(t));

  // balance
  std::vector<std::string> stack;
  for (size_t i = 0; i < low.size(); ++i) {
    const std::string& t = low[i];
    std::string prev = i > 0 ? low[i - 1] : "";
    std::string next = i + 1 < low.size() ? low[i + 1] : "";
    if (t == "end") {
      if (stack.empty()) {
        problems.push_back("unbalanced 'end' at token " + std::to_string(i));
        continue;
      }
      std::string top = stack.back();
      stack.pop_back();
      std::set<std::string> closers{"if", "case", "process", "loop", "architecture", "component", "function", "package", "entity"};
      if (closers.count(next) && next != top && !(top == "entity" && !closers.count(next)))
        problems.push_back("'end " + next + "' closes '" + top + "'");
      continue;
    }
    if (prev == "end") continue;
    if (t == "if" && prev != "end") stack.push_back("if");
    else if (t == "case") stack.push_back("case");
    else if (t == "process") stack.push_back("process");
    else if (t == "loop") stack.push_back("loop");
    else if (t == "entity" && prev != "end") stack.push_back("entity");
    else if (t == "architecture") stack.push_back("architecture");
    else if (t == "component" && prev != "end") stack.push_back("component");
    else if (t == "package" && next != "body" && prev != "end") stack.push_back("package");
    else if (t == "body" && prev == "package" && (i < 2 || low[i - 2] != "end")) stack.push_back("package");
    else if (t == "function") {
      // declarations end with `return T;`, bodies with `is`
      size_t j = i;
      while (j < low.size() && low[j] != "is" && low[j] != "return") ++j;
      size_t k = j + 1;
      while (k < low.size() && low[k] != "is" && low[k] != "function" && low[k] != "end") ++k;
      if (k < low.size() && low[k] == "is") stack.push_back("function");
    }
  }
  for (const auto& s : stack) problems.push_back("unclosed '" + s + "'");

  // declarations
  std::set<std::string> declared;
  for (size_t i = 0; i + 1 < low.size(); ++i) {
    const std::string& t = low[i];
    if (t == "signal" || t == "constant" || t == "variable" || t == "type" || t == "entity" || t == "component" ||
        t == "function" || t == "package") {
      declared.insert(low[i + 1]);
    }
    if (t == "process" && i > 0) declared.insert(low[i - 1]);
    if (t == "for" && i + 2 < low.size() && low[i + 2] == "in") declared.insert(low[i + 1]);
  }
  // enum members
  std::vector<std::string> states;
  {
    auto p = text.find("type pro_states is (");
    if (p != std::string::npos) {
      auto e = text.find(')', p);
      for (const auto& id : identifiers(text.substr(p + 20, e - p - 20))) {
        states.push_back(id);
        declared.insert(lower(id));
      }
    }
  }
  // labels, ports, parameters: `name :`
  {
    static const std::regex decl(R"(([A-Za-z_][A-Za-z0-9_]*)\s*:(?!=))");
    for (std::sregex_iterator it(text.begin(), text.end(), decl), e; it != e; ++it) declared.insert(lower((*it)[1]));
  }
  // duplicate signal declarations outside component blocks
  {
    std::map<std::string, int> count;
    bool in_comp = false;
    for (size_t i = 0; i + 1 < low.size(); ++i) {
      if (low[i] == "component" && (i == 0 || low[i - 1] != "end")) in_comp = true;
      if (low[i] == "end" && low[i + 1] == "component") in_comp = false;
      if (!in_comp && (low[i] == "signal" || low[i] == "constant")) ++count[low[i + 1]];
    }
    for (const auto& [n, c] : count)
      if (c > 1) problems.push_back("'" + n + "' declared " + std::to_string(c) + " times");
  }
  std::set<std::string> reported;
  for (size_t i = 0; i < low.size(); ++i) {
    const std::string& t = low[i];
    if (vhdl_words().count(t)) continue;
    bool known = false;
    for (const auto& w : vhdl_words())
      if (lower(w) == t) known = true;
    if (known || declared.count(t)) continue;
    // formal parameter names in function declarations and named associations
    if (i + 1 < toks.size() && text.find(toks[i] + " =>") != std::string::npos) continue;
    if (reported.insert(t).second) problems.push_back("undeclared identifier '" + toks[i] + "'");
  }

  // every state in all three case statements
  if (!states.empty()) {
    for (const char* proc : {"control_path", "data_path", "data_trans"}) {
      auto b = text.find(std::string(proc) + ": process");
      auto e = text.find(std::string("end process ") + proc, b);
      if (b == std::string::npos || e == std::string::npos) {
        problems.push_back(std::string("missing process ") + proc);
        continue;
      }
      std::string body = text.substr(b, e - b);
      for (const auto& s : states)
        if (body.find("when " + s + " =>") == std::string::npos)
          problems.push_back("state " + s + " not handled in " + proc);
    }
  }
  return problems;
}

}  // namespace hls

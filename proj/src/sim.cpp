#include "hls/sim.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

namespace hls {

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::AllEnded: return "all-ended";
    case Termination::Deadlock: return "deadlock";
    case Termination::CycleLimit: return "cycle-limit";
  }
  return "?";
}

std::string trace_line(const TraceEvent& e) {
  return std::to_string(e.cycle) + "\t" + e.process + "\t" + e.kind + "\t" + e.detail;
}

namespace {

struct SOp {
  MOperandKind kind = MOperandKind::Const;
  int obj = -1;
  int64_t num = 0;
  std::vector<SOp> index;
  int lo = -1, hi = -1;
  std::optional<DataType> conv;
  DataType ctx;  // type of a constant
};

struct SInstr {
  MOpcode op = MOpcode::Nop;
  SOp dst;
  std::vector<SOp> src;
  Op alu = Op::Add;
  DataType ta, tb;
  int target = -1;
  int fobj = -1;
  std::string method;
  std::vector<int64_t> args;
};

enum class RK { Write, Ram, QRead, QWrite, Method, ChanRead, ChanWrite };

struct SReq {
  int obj = -1;
  RK kind = RK::Write;
  std::string method;
  int64_t arg = 0;
  bool has_arg = false;
};

struct SState {
  std::string name;
  std::vector<SInstr> instrs;
  std::vector<SReq> reqs;
  int next = 0;
};

struct Write {
  int obj;
  int64_t index;
  int lo, hi;
  int64_t value;
};

struct Effects {
  std::vector<Write> writes;
  std::vector<std::pair<int64_t, int64_t>> temps;
  std::vector<std::pair<int, int64_t>> pushes;
  std::vector<int> pops;
  int next = 0;
};

struct Proc {
  int index = 0;
  std::string name;
  std::vector<SState> states;
  int end = 0;
  bool function = false;
  ProcStatus status = ProcStatus::Idle;
  int pc = -1;  // -1: start state
  bool granted = false;
  int granted_next = 0;
  int call_target = -1;
  int call_next = 0;
  int64_t since = -1;
  bool blocked = false;
  std::map<int64_t, int64_t> immed, temp;
  std::map<int64_t, DataType> temp_type;
  int exc_obj = -1;
  int exc_out = -1;  // a function's exception result register

  // per cycle
  bool commit_now = false;
  bool requesting = false;
  bool grant_now = false;
  Effects eff;
};

struct ObjState {
  std::deque<int64_t> queue;
  int owner = -1;
  int64_t count = 0;
  std::multiset<int> takers;
  bool flag = false;
  bool running = false;
  int64_t next_fire = 0;
  int64_t interval = 0;
  std::vector<int> arrivals;
  std::deque<std::pair<int, int64_t>> offers;
  SchedPolicy policy = SchedPolicy::Static;
};

uint64_t low_mask(int w) { return w >= 64 ? ~0ull : ((1ull << w) - 1); }

}  // namespace

struct Simulator::Impl {
  const TypedModule& m;
  SimConfig cfg;
  Store store;
  std::vector<Proc> procs;
  std::vector<ObjState> objs;
  int64_t now = 0;
  bool progress = false;
  std::vector<TraceEvent> trace;
  size_t cycle_trace_start = 0;
  std::set<int> watched;
  std::map<std::string, std::string> uncaught;

  Impl(const TypedModule& mod, const std::vector<MProgram>& programs, SimConfig c) : m(mod), cfg(std::move(c)) {
    store = Store::zero(m);
    objs.resize(m.objects.size());
    for (const auto& o : m.objects) {
      ObjState& s = objs[static_cast<size_t>(o.id)];
      s.policy = o.policy;
      if (auto it = cfg.policy.find(o.name); it != cfg.policy.end()) s.policy = it->second;
      if (o.kind == ObjKind::Semaphore) s.count = o.init;
      if (o.kind == ObjKind::Timer) s.interval = o.interval;
    }
    for (const auto& w : cfg.watch) {
      int id = m.find_object(w);
      if (id >= 0) watched.insert(id);
    }
    if (programs.size() != m.processes.size())
      throw SimLoadError("expected " + std::to_string(m.processes.size()) + " programs, got " +
                         std::to_string(programs.size()));
    for (size_t i = 0; i < m.processes.size(); ++i) load(static_cast<int>(i), programs[i]);
    int main = m.main_process();
    if (main < 0) throw SimLoadError("no main process");
    procs[static_cast<size_t>(main)].status = ProcStatus::Running;
    event(procs[static_cast<size_t>(main)], "start", "");
  }

  // ----------------------------------------------------------- loading

  void load(int idx, const MProgram& prog) {
    const TProcess& tp = m.processes[static_cast<size_t>(idx)];
    if (!prog.process.empty() && prog.process != tp.name)
      throw SimLoadError("missing program for process '" + tp.name + "'");
    Proc p;
    p.index = idx;
    p.name = tp.name;
    p.function = tp.function >= 0;
    std::map<std::string, int> names;
    for (const auto& d : prog.imports) {
      int id = m.find_object(d.name);
      if (id < 0) throw SimLoadError("program '" + tp.name + "' references undeclared global '" + d.name + "'");
      names[d.name] = id;
      if (p.function && d.name == "EXC_" + tp.name) p.exc_out = id;
    }
    for (const auto& d : prog.data) {
      if (d.kind == "temp") continue;
      int id = -1;
      for (int l : tp.locals)
        if (m.obj(l).name == d.name) id = l;
      if (id < 0) throw SimLoadError("program '" + tp.name + "' declares unknown local '" + d.name + "'");
      names[d.name] = id;
      if (d.name == "EXCEPTION") p.exc_obj = id;
    }
    MTypeEnv env(prog);
    for (const auto& d : prog.data)
      if (d.kind == "temp" && d.type) {
        MOperand t = parse_temp(d.name, tp.name);
        p.temp_type[t.value] = *d.type;
      }

    std::map<std::string, int> targets;
    std::vector<MState> states = program_states(prog, &targets);
    p.end = static_cast<int>(states.size());
    auto resolve = [&](const MOperand& o, std::optional<DataType> ctx, auto& self) -> SOp {
      SOp s;
      s.kind = o.kind;
      s.num = o.value;
      s.lo = o.lo;
      s.hi = o.hi;
      s.conv = o.conv;
      s.ctx = env.type(o, ctx);
      if (o.kind == MOperandKind::Object) {
        auto it = names.find(o.name);
        if (it == names.end())
          throw SimLoadError("program '" + tp.name + "' references undeclared object '" + o.name + "'");
        s.obj = it->second;
      }
      for (const auto& i : o.index) s.index.push_back(self(i, DataType::integer(64), self));
      return s;
    };
    auto target = [&](const std::string& l) {
      auto it = targets.find(l);
      if (it == targets.end()) throw SimLoadError("undefined label '" + l + "' in '" + tp.name + "'");
      return it->second;
    };
    for (size_t si = 0; si < states.size(); ++si) {
      const MState& ms = states[si];
      SState ss;
      ss.name = ms.label;
      ss.next = static_cast<int>(si) + 1;
      int first = ms.bind ? ms.first + 1 : ms.first;
      int last = ms.first + ms.count;
      for (int k = first; k < last; ++k) {
        const MInstr& in = prog.code[static_cast<size_t>(k)];
        SInstr s;
        s.op = in.op;
        s.alu = in.alu;
        switch (in.op) {
          case MOpcode::Move: {
            DataType dt = in.ops[0].kind == MOperandKind::Immed ? env.type(in.ops[1]) : env.type(in.ops[0]);
            s.dst = resolve(in.ops[0], dt, resolve);
            s.src.push_back(resolve(in.ops[1], dt, resolve));
            break;
          }
          case MOpcode::Expr: {
            auto [ta, tb] = env.expr_types(in);
            s.ta = ta;
            s.tb = tb;
            s.dst = resolve(in.ops[0], std::nullopt, resolve);
            s.src.push_back(resolve(in.ops[1], ta, resolve));
            if (in.ops.size() > 2) s.src.push_back(resolve(in.ops[2], tb, resolve));
            break;
          }
          case MOpcode::Jump: s.target = target(in.target); break;
          case MOpcode::FalseJump:
            s.src.push_back(resolve(in.ops[0], DataType::boolean(), resolve));
            s.target = target(in.target);
            break;
          case MOpcode::Fun: {
            auto it = names.find(in.ops[0].name);
            if (it == names.end())
              throw SimLoadError("program '" + tp.name + "' references undeclared object '" + in.ops[0].name + "'");
            s.fobj = it->second;
            s.method = in.method;
            for (size_t a = 1; a < in.ops.size(); ++a) s.args.push_back(in.ops[a].value);
            break;
          }
          default: break;
        }
        env.define(in);
        add_requests(ss, s);
        ss.instrs.push_back(std::move(s));
      }
      p.states.push_back(std::move(ss));
    }
    procs.push_back(std::move(p));
  }

  static MOperand parse_temp(const std::string& name, const std::string& proc) {
    // "$temp.[n]"
    auto lb = name.find('[');
    auto rb = name.find(']');
    if (lb == std::string::npos || rb == std::string::npos)
      throw SimLoadError("malformed temporary '" + name + "' in '" + proc + "'");
    return MOperand::numbered(MOperandKind::Temp, std::stoll(name.substr(lb + 1, rb - lb - 1)));
  }

  void add_req(SState& s, SReq r) {
    for (const auto& x : s.reqs)
      if (x.obj == r.obj && x.kind == r.kind && x.method == r.method) return;
    s.reqs.push_back(std::move(r));
  }

  void operand_reqs(SState& s, const SOp& o) {
    for (const auto& i : o.index) operand_reqs(s, i);
    if (o.kind != MOperandKind::Object) return;
    const Object& ob = m.obj(o.obj);
    switch (ob.kind) {
      case ObjKind::Var: add_req(s, {ob.block >= 0 ? ob.block : ob.id, RK::Ram, "", 0, false}); break;
      case ObjKind::Queue: add_req(s, {ob.id, RK::QRead, "", 0, false}); break;
      case ObjKind::Channel: add_req(s, {ob.id, ob.buffered ? RK::QRead : RK::ChanRead, "", 0, false}); break;
      default: break;
    }
  }

  void add_requests(SState& s, const SInstr& in) {
    if (in.op == MOpcode::Fun) {
      SReq r{in.fobj, RK::Method, in.method, 0, false};
      if (!in.args.empty()) {
        r.arg = in.args[0];
        r.has_arg = true;
      }
      add_req(s, r);
      return;
    }
    if (in.op != MOpcode::Move && in.op != MOpcode::Expr && in.op != MOpcode::FalseJump) return;
    for (const auto& o : in.src) operand_reqs(s, o);
    if (in.op == MOpcode::FalseJump) return;
    for (const auto& i : in.dst.index) operand_reqs(s, i);
    if (in.dst.kind != MOperandKind::Object) return;
    const Object& ob = m.obj(in.dst.obj);
    switch (ob.kind) {
      case ObjKind::Var: add_req(s, {ob.block >= 0 ? ob.block : ob.id, RK::Ram, "", 0, false}); break;
      case ObjKind::Queue: add_req(s, {ob.id, RK::QWrite, "", 0, false}); break;
      case ObjKind::Channel: add_req(s, {ob.id, ob.buffered ? RK::QWrite : RK::ChanWrite, "", 0, false}); break;
      default:
        if (ob.global && !function_interface(m, ob.id)) add_req(s, {ob.id, RK::Write, "", 0, false});
        break;
    }
  }

  // --------------------------------------------------------------- trace

  void event(const Proc& p, const std::string& kind, const std::string& detail) {
    if (!cfg.trace) return;
    if (kind == "state-enter" && !cfg.trace_states) return;
    trace.push_back({now, p.name, kind, detail});
  }

  std::string state_name(const Proc& p, int pc) const {
    if (pc < 0) return p.name + "_start";
    if (pc >= p.end) return p.name + "_end";
    return p.states[static_cast<size_t>(pc)].name;
  }

  // ----------------------------------------------------------- evaluate

  int64_t read(const SOp& o, Proc& p) {
    int64_t v = 0;
    switch (o.kind) {
      case MOperandKind::Const: return wrap(o.ctx, o.num);
      case MOperandKind::Immed: v = p.immed[o.num]; break;
      case MOperandKind::Temp: v = p.temp[o.num]; break;
      case MOperandKind::Alu: return 0;
      case MOperandKind::Object: {
        const Object& ob = m.obj(o.obj);
        const ObjState& s = objs[static_cast<size_t>(o.obj)];
        if (ob.is_storage()) {
          int64_t idx = o.index.empty() ? -1 : read(o.index[0], p);
          v = store.get(o.obj, idx);
        } else if (ob.kind == ObjKind::Queue || (ob.kind == ObjKind::Channel && ob.buffered)) {
          v = s.queue.empty() ? 0 : s.queue.front();
        } else if (ob.kind == ObjKind::Channel) {
          v = s.offers.empty() ? 0 : s.offers.front().second;
        }
        break;
      }
    }
    if (o.lo >= 0) v = static_cast<int64_t>((static_cast<uint64_t>(v) >> o.lo) & low_mask(o.hi - o.lo + 1));
    if (o.conv) v = convert(*o.conv, *o.conv, v);
    return v;
  }

  void write(const SOp& d, int64_t v, Proc& p, Effects& e) {
    switch (d.kind) {
      case MOperandKind::Immed: p.immed[d.num] = v; return;
      case MOperandKind::Temp: {
        auto it = p.temp_type.find(d.num);
        e.temps.push_back({d.num, it == p.temp_type.end() ? v : wrap(it->second, v)});
        return;
      }
      case MOperandKind::Object: {
        const Object& ob = m.obj(d.obj);
        if (ob.is_storage()) {
          int64_t idx = d.index.empty() ? -1 : read(d.index[0], p);
          e.writes.push_back({d.obj, idx, d.lo, d.hi, v});
        } else {
          e.pushes.push_back({d.obj, wrap(ob.type, v)});
        }
        return;
      }
      default: return;
    }
  }

  Effects exec(Proc& p, const SState& s) {
    Effects e;
    e.next = s.next;
    for (const auto& in : s.instrs) {
      switch (in.op) {
        case MOpcode::Move: write(in.dst, read(in.src[0], p), p, e); break;
        case MOpcode::Expr: {
          int64_t r;
          if (in.src.size() == 1) r = eval_unary(in.alu, in.ta, read(in.src[0], p));
          else r = eval_binary(in.alu, in.ta, read(in.src[0], p), in.tb, read(in.src[1], p));
          write(in.dst, r, p, e);
          break;
        }
        case MOpcode::Jump: e.next = in.target; break;
        case MOpcode::FalseJump:
          if (read(in.src[0], p) == 0) e.next = in.target;
          break;
        default: break;
      }
    }
    for (const auto& r : s.reqs)
      if (r.kind == RK::QRead) e.pops.push_back(r.obj);
    return e;
  }

  std::string exception_name(int64_t e) const {
    if (e > 0 && static_cast<size_t>(e) <= m.exceptions.size()) return m.exceptions[static_cast<size_t>(e - 1)];
    return std::to_string(e);
  }

  void commit(Proc& p, const Effects& e) {
    for (const auto& w : e.writes) {
      const Object& ob = m.obj(w.obj);
      int64_t nv;
      if (w.lo < 0) {
        nv = convert(ob.type, ob.type, w.value);
      } else {
        int width = w.hi - w.lo + 1;
        uint64_t mask = low_mask(width);
        uint64_t word = static_cast<uint64_t>(store.get(w.obj, w.index)) & ~(mask << w.lo);
        word |= (static_cast<uint64_t>(w.value) & mask) << w.lo;
        nv = wrap(ob.type, static_cast<int64_t>(word));
      }
      if (w.obj == p.exc_obj || w.obj == p.exc_out) {
        int64_t old = store.get(w.obj, w.index);
        if (nv > 0 && old == 0) event(p, "raise", exception_name(nv));
        else if (nv == 0 && old > 0 && w.obj == p.exc_obj) event(p, "catch", exception_name(old));
      }
      store.set(w.obj, w.index, nv);
      if (watched.count(w.obj))
        event(p, "write", ob.name + (w.index >= 0 ? ".[" + std::to_string(w.index) + "]" : "") + " <- " +
                              std::to_string(nv));
    }
    for (const auto& [n, v] : e.temps) p.temp[n] = v;
    for (int q : e.pops) {
      auto& s = objs[static_cast<size_t>(q)];
      if (!s.queue.empty()) s.queue.pop_front();
    }
    for (const auto& [q, v] : e.pushes) {
      const Object& ob = m.obj(q);
      if (ob.kind == ObjKind::Channel && !ob.buffered) continue;
      objs[static_cast<size_t>(q)].queue.push_back(v);
    }
  }

  void enter(Proc& p, int pc) {
    p.pc = pc;
    p.since = -1;
    p.blocked = false;
    event(p, "state-enter", state_name(p, pc));
    if (pc >= p.end) {
      p.status = ProcStatus::Ended;
      event(p, "end", "");
      if (p.exc_obj >= 0 && !p.function) {
        int64_t e = store.get(p.exc_obj);
        if (e > 0 && static_cast<size_t>(e) <= m.exceptions.size()) {
          uncaught[p.name] = m.exceptions[static_cast<size_t>(e - 1)];
          event(p, "raise", "uncaught " + m.exceptions[static_cast<size_t>(e - 1)]);
        }
      }
    }
  }

  void start_process(Proc& p) {
    p.status = ProcStatus::Running;
    p.granted = false;
    p.call_target = -1;
    p.since = -1;
    p.blocked = false;
    p.immed.clear();
    p.pc = -1;
    event(p, "start", "");
  }

  // ---------------------------------------------------------- arbitration

  bool is_wait(const SReq& r) const {
    if (r.kind == RK::ChanWrite) return true;
    if (r.kind != RK::Method || r.method != "await") return false;
    ObjKind k = m.obj(r.obj).kind;
    return k == ObjKind::Event || k == ObjKind::Barrier || k == ObjKind::Timer;
  }

  bool ready(const SReq& r) const {
    const Object& ob = m.obj(r.obj);
    const ObjState& s = objs[static_cast<size_t>(r.obj)];
    switch (r.kind) {
      case RK::Write:
      case RK::Ram: return true;
      case RK::QRead: return !s.queue.empty();
      case RK::QWrite: return static_cast<int>(s.queue.size()) < (ob.kind == ObjKind::Channel ? 1 : ob.depth);
      case RK::ChanRead: return !s.offers.empty();
      case RK::ChanWrite: return false;
      case RK::Method: break;
    }
    switch (ob.kind) {
      case ObjKind::Mutex: return r.method != "lock" || s.owner < 0;
      case ObjKind::Semaphore:
        if (r.method == "down") return s.count > 0;
        if (r.method == "up" || r.method == "unlock") return s.count < ob.depth;
        return true;
      case ObjKind::Process: {
        if (r.method != "call") return true;
        for (const auto& p : procs)
          if (p.name == ob.name) return p.status != ProcStatus::Running;
        return false;
      }
      default: return true;
    }
  }

  Proc* proc_by_object(int obj) {
    const std::string& n = m.obj(obj).name;
    for (auto& p : procs)
      if (p.name == n) return &p;
    return nullptr;
  }

  std::vector<Proc*> pending_starts, pending_stops;

  void apply_method(Proc& p, const SReq& r) {
    const Object& ob = m.obj(r.obj);
    ObjState& s = objs[static_cast<size_t>(r.obj)];
    switch (ob.kind) {
      case ObjKind::Mutex:
        if (r.method == "lock") s.owner = p.index;
        else s.owner = -1;
        break;
      case ObjKind::Semaphore:
        if (r.method == "down") {
          --s.count;
          s.takers.insert(p.index);
        } else if (r.method == "up" || r.method == "unlock") {
          ++s.count;
          if (auto it = s.takers.find(p.index); it != s.takers.end()) s.takers.erase(it);
          else if (!s.takers.empty()) s.takers.erase(s.takers.begin());
        } else if (r.method == "init") {
          s.count = r.has_arg ? r.arg : ob.init;
          s.takers.clear();
        }
        break;
      case ObjKind::Event:
        if (r.method == "init") {
          s.flag = false;
        } else if (r.method == "wakeup") {
          bool any = false;
          for (auto& w : procs)
            if (w.requesting && !w.grant_now && w.since >= 0 && w.since < now)
              for (const auto& wr : w.states[static_cast<size_t>(w.pc)].reqs)
                if (wr.obj == r.obj && wr.method == "await") {
                  release(w, ob.name + ".await");
                  any = true;
                }
          if (!any && ob.latched) s.flag = true;
        }
        break;
      case ObjKind::Timer:
        if (r.method == "start") {
          s.running = s.interval > 0;
          s.next_fire = now + s.interval;
        } else if (r.method == "stop" || r.method == "init") {
          s.running = false;
        } else if (r.method == "time") {
          s.interval = r.arg;
        }
        break;
      case ObjKind::Process: {
        Proc* t = proc_by_object(r.obj);
        if (!t) break;
        if (r.method == "start") {
          if (t->status != ProcStatus::Running) pending_starts.push_back(t);
        } else if (r.method == "stop") {
          pending_stops.push_back(t);
        } else if (r.method == "call") {
          pending_starts.push_back(t);
          p.call_target = t->index;
          p.call_next = p.eff.next;
        }
        break;
      }
      default: break;
    }
  }

  void release(Proc& p, const std::string& what) {
    p.grant_now = true;
    progress = true;
    event(p, p.blocked ? "unblock" : "grant", what);
  }

  std::string req_text(const SReq& r) const {
    const std::string& n = m.obj(r.obj).name;
    switch (r.kind) {
      case RK::Write: return n + ".write";
      case RK::Ram: return n + ".access";
      case RK::QRead:
      case RK::ChanRead: return n + ".read";
      case RK::QWrite:
      case RK::ChanWrite: return n + ".write";
      case RK::Method: return n + "." + r.method;
    }
    return n;
  }

  void arbitrate() {
    // timers first: a firing timer releases its current waiters
    for (const auto& o : m.objects) {
      if (o.kind != ObjKind::Timer) continue;
      ObjState& s = objs[static_cast<size_t>(o.id)];
      if (!s.running || now < s.next_fire) continue;
      progress = true;
      for (auto& p : procs)
        if (p.requesting && !p.grant_now)
          for (const auto& r : p.states[static_cast<size_t>(p.pc)].reqs)
            if (r.obj == o.id && r.method == "await") release(p, o.name + ".await");
      if (o.timer_mode == 0) s.next_fire += s.interval;
      else s.running = false;
    }

    // objects with exclusive access, one grant per object per cycle
    std::map<int, std::vector<int>> by_obj;
    for (auto& p : procs) {
      if (!p.requesting || p.grant_now) continue;
      for (const auto& r : p.states[static_cast<size_t>(p.pc)].reqs)
        if (!is_wait(r)) by_obj[r.obj].push_back(p.index);
    }
    std::set<int> excluded;
    std::map<int, int> winner;
    for (bool changed = true; changed;) {
      changed = false;
      winner.clear();
      for (auto& [obj, cands] : by_obj) {
        const ObjState& s = objs[static_cast<size_t>(obj)];
        std::vector<int> order;
        if (s.policy == SchedPolicy::Fifo) {
          for (int a : s.arrivals)
            if (std::find(cands.begin(), cands.end(), a) != cands.end()) order.push_back(a);
          for (int c : cands)
            if (std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);
        } else {
          order = cands;
          std::sort(order.begin(), order.end());
        }
        for (int c : order) {
          if (excluded.count(c)) continue;
          bool ok = true;
          for (const auto& r : procs[static_cast<size_t>(c)].states[static_cast<size_t>(procs[static_cast<size_t>(c)].pc)].reqs)
            if (r.obj == obj && !is_wait(r) && !ready(r)) ok = false;
          if (ok) {
            winner[obj] = c;
            break;
          }
        }
      }
      for (auto& p : procs) {
        if (!p.requesting || p.grant_now || excluded.count(p.index)) continue;
        bool all = true, any = false;
        for (const auto& r : p.states[static_cast<size_t>(p.pc)].reqs) {
          if (is_wait(r)) {
            all = false;
            continue;
          }
          auto it = winner.find(r.obj);
          bool won = it != winner.end() && it->second == p.index;
          any = any || won;
          all = all && won;
        }
        if (!all && any) {
          excluded.insert(p.index);
          changed = true;
        }
      }
    }

    // grants in process order
    for (auto& p : procs) {
      if (!p.requesting || p.grant_now) continue;
      const auto& reqs = p.states[static_cast<size_t>(p.pc)].reqs;
      bool all = !reqs.empty();
      for (const auto& r : reqs) {
        auto it = winner.find(r.obj);
        if (is_wait(r) || it == winner.end() || it->second != p.index) all = false;
      }
      if (!all) continue;
      std::string what;
      for (const auto& r : reqs) {
        what += (what.empty() ? "" : " ") + req_text(r);
        if (r.kind == RK::Method) apply_method(p, r);
        if (r.kind == RK::ChanRead) {
          ObjState& s = objs[static_cast<size_t>(r.obj)];
          int w = s.offers.front().first;
          s.offers.pop_front();
          release(procs[static_cast<size_t>(w)], m.obj(r.obj).name + ".write");
        }
      }
      if (p.call_target >= 0) {
        // blocked until the callee ends
        progress = true;
        event(p, "grant", what);
        p.requesting = false;
        continue;
      }
      release(p, what);
    }

    // latched events, barriers
    for (const auto& o : m.objects) {
      ObjState& s = objs[static_cast<size_t>(o.id)];
      if (o.kind == ObjKind::Event && s.flag) {
        for (auto& p : procs) {
          if (!p.requesting || p.grant_now) continue;
          bool waits = false;
          for (const auto& r : p.states[static_cast<size_t>(p.pc)].reqs)
            waits = waits || (r.obj == o.id && r.method == "await");
          if (waits) {
            s.flag = false;
            release(p, o.name + ".await");
            break;
          }
        }
      }
      if (o.kind == ObjKind::Barrier && o.group > 0) {
        std::vector<Proc*> ws;
        for (auto& p : procs) {
          if (!p.requesting || p.grant_now) continue;
          for (const auto& r : p.states[static_cast<size_t>(p.pc)].reqs)
            if (r.obj == o.id && r.method == "await") ws.push_back(&p);
        }
        if (static_cast<int>(ws.size()) >= o.group)
          for (Proc* w : ws) release(*w, o.name + ".await");
      }
    }
  }

  // ---------------------------------------------------------------- step

  void step() {
    cycle_trace_start = trace.size();
    progress = false;
    pending_starts.clear();
    pending_stops.clear();

    // phase A: evaluate against the old state, post requests
    for (auto& p : procs) {
      p.commit_now = false;
      p.requesting = false;
      p.grant_now = false;
      if (p.status != ProcStatus::Running) continue;
      if (p.granted) {
        p.granted = false;
        enter(p, p.granted_next);
        progress = true;
        continue;
      }
      if (p.call_target >= 0) {
        if (procs[static_cast<size_t>(p.call_target)].status != ProcStatus::Running) {
          p.call_target = -1;
          if (p.blocked) event(p, "unblock", "call returned");
          enter(p, p.call_next);
          progress = true;
        }
        continue;
      }
      if (p.pc < 0) {
        enter(p, 0);
        progress = true;
        continue;
      }
      if (p.pc >= p.end) {
        p.status = ProcStatus::Ended;
        continue;
      }
      const SState& s = p.states[static_cast<size_t>(p.pc)];
      p.eff = exec(p, s);
      if (s.reqs.empty()) {
        p.commit_now = true;
        continue;
      }
      p.requesting = true;
      if (p.since < 0) {
        p.since = now;
        progress = true;
        for (const auto& r : s.reqs) {
          auto& arr = objs[static_cast<size_t>(r.obj)].arrivals;
          if (std::find(arr.begin(), arr.end(), p.index) == arr.end()) arr.push_back(p.index);
        }
      }
    }

    // phase B: schedulers
    arbitrate();

    // phase C: commit
    for (auto& p : procs) {
      if (p.commit_now) {
        commit(p, p.eff);
        enter(p, p.eff.next);
        progress = true;
        continue;
      }
      if (!p.requesting) continue;
      const SState& s = p.states[static_cast<size_t>(p.pc)];
      if (p.grant_now) {
        commit(p, p.eff);
        p.granted = true;
        p.granted_next = p.eff.next;
        for (const auto& r : s.reqs) {
          auto& arr = objs[static_cast<size_t>(r.obj)].arrivals;
          arr.erase(std::remove(arr.begin(), arr.end(), p.index), arr.end());
        }
        continue;
      }
      for (const auto& r : s.reqs) {
        if (r.kind != RK::ChanWrite) continue;
        auto& offers = objs[static_cast<size_t>(r.obj)].offers;
        bool offered = std::any_of(offers.begin(), offers.end(), [&](const auto& o) { return o.first == p.index; });
        if (!offered) {
          int64_t v = 0;
          for (const auto& [q, val] : p.eff.pushes)
            if (q == r.obj) v = val;
          offers.push_back({p.index, v});
          progress = true;
        }
      }
      if (!p.blocked) {
        p.blocked = true;
        std::string what;
        for (const auto& r : s.reqs) what += (what.empty() ? "" : " ") + req_text(r);
        event(p, "block", what);
      }
    }
    for (Proc* t : pending_stops) {
      t->status = ProcStatus::Idle;
      event(*t, "stop", "");
      progress = true;
    }
    for (Proc* t : pending_starts) {
      start_process(*t);
      progress = true;
    }

    // events of one cycle in process declaration order
    std::stable_sort(trace.begin() + static_cast<long>(cycle_trace_start), trace.end(),
                     [&](const TraceEvent& a, const TraceEvent& b) { return order_of(a.process) < order_of(b.process); });
    ++now;
  }

  int order_of(const std::string& name) const {
    for (const auto& p : procs)
      if (p.name == name) return p.index;
    return -1;
  }

  bool all_ended() const {
    return std::none_of(procs.begin(), procs.end(), [](const Proc& p) { return p.status == ProcStatus::Running; });
  }

  bool timers_pending() const {
    for (const auto& o : m.objects)
      if (o.kind == ObjKind::Timer && objs[static_cast<size_t>(o.id)].running) return true;
    return false;
  }

  std::vector<BlockedProcess> blocked_report() const {
    std::vector<BlockedProcess> out;
    for (const auto& p : procs) {
      if (p.status != ProcStatus::Running) continue;
      BlockedProcess b;
      b.process = p.name;
      if (p.call_target >= 0) {
        b.object = procs[static_cast<size_t>(p.call_target)].name;
        b.op = "call";
      } else if (p.pc >= 0 && p.pc < p.end && !p.states[static_cast<size_t>(p.pc)].reqs.empty()) {
        const SReq& r = p.states[static_cast<size_t>(p.pc)].reqs.front();
        const Object& ob = m.obj(r.obj);
        const ObjState& s = objs[static_cast<size_t>(r.obj)];
        b.object = ob.name;
        b.op = r.kind == RK::Method ? r.method : req_text(r).substr(ob.name.size() + 1);
        if (ob.kind == ObjKind::Mutex && s.owner >= 0) b.holders.push_back(procs[static_cast<size_t>(s.owner)].name);
        if (ob.kind == ObjKind::Semaphore)
          for (int t : s.takers) b.holders.push_back(procs[static_cast<size_t>(t)].name);
      }
      out.push_back(b);
    }
    return out;
  }

  std::optional<std::vector<BlockedProcess>> deadlock() const {
    if (progress || all_ended() || timers_pending()) return std::nullopt;
    return blocked_report();
  }
};

Simulator::Simulator(const TypedModule& m, const std::vector<MProgram>& programs, SimConfig cfg)
    : impl_(std::make_unique<Impl>(m, programs, std::move(cfg))) {}
Simulator::~Simulator() = default;
Simulator::Simulator(Simulator&&) noexcept = default;

void Simulator::step() { impl_->step(); }

SimResult Simulator::run(int64_t max_cycles) {
  SimResult r;
  Impl& s = *impl_;
  r.termination = Termination::CycleLimit;
  while (s.now < max_cycles) {
    if (s.all_ended()) {
      r.termination = Termination::AllEnded;
      break;
    }
    s.step();
    if (auto d = s.deadlock()) {
      r.termination = Termination::Deadlock;
      r.deadlock = *d;
      for (const auto& b : *d) {
        std::string detail = "blocked on " + std::string(obj_kind_name(s.m.obj(s.m.find_object(b.object) >= 0 ? s.m.find_object(b.object) : 0).kind)) +
                             " " + b.object + " " + b.op;
        if (!b.holders.empty()) {
          detail += " held by";
          for (const auto& h : b.holders) detail += " " + h;
        }
        if (s.cfg.trace) s.trace.push_back({s.now, b.process, "deadlock", detail});
      }
      break;
    }
  }
  if (r.termination == Termination::CycleLimit && s.all_ended()) r.termination = Termination::AllEnded;
  r.cycles = s.now;
  r.store = s.store;
  r.uncaught = s.uncaught;
  r.trace = s.trace;
  return r;
}

std::optional<std::vector<BlockedProcess>> Simulator::detect_deadlock() const { return impl_->deadlock(); }
bool Simulator::all_ended() const { return impl_->all_ended(); }
int64_t Simulator::cycle() const { return impl_->now; }

ProcStatus Simulator::status(const std::string& process) const {
  for (const auto& p : impl_->procs)
    if (p.name == process) return p.status;
  throw std::invalid_argument("no process '" + process + "'");
}

std::string Simulator::state(const std::string& process) const {
  for (const auto& p : impl_->procs)
    if (p.name == process) return impl_->state_name(p, p.pc);
  throw std::invalid_argument("no process '" + process + "'");
}

namespace {

int lookup(const TypedModule& m, const std::string& name) {
  auto dot = name.find('.');
  if (dot == std::string::npos) return m.find_object(name);
  std::string proc = name.substr(0, dot), local = name.substr(dot + 1);
  for (const auto& o : m.objects)
    if (!o.global && o.owner == proc && o.name == local) return o.id;
  return -1;
}

}  // namespace

int64_t Simulator::value(const std::string& name, int64_t index) const {
  int id = lookup(impl_->m, name);
  if (id < 0) throw std::invalid_argument("no object '" + name + "'");
  return impl_->store.get(id, index);
}

void Simulator::set_value(const std::string& name, int64_t index, int64_t v) {
  int id = lookup(impl_->m, name);
  if (id < 0) throw std::invalid_argument("no object '" + name + "'");
  impl_->store.set(id, index, wrap(impl_->m.obj(id).type, v));
}

const Store& Simulator::store() const { return impl_->store; }
const std::vector<TraceEvent>& Simulator::trace() const { return impl_->trace; }
size_t Simulator::process_count() const { return impl_->procs.size(); }

}  // namespace hls

#include "hls/interp.hpp"

#include <stdexcept>

namespace hls {

Store Store::zero(const TypedModule& m) {
  Store s;
  s.values.resize(m.objects.size());
  for (const auto& o : m.objects) {
    if (!o.is_storage()) continue;
    s.values[static_cast<size_t>(o.id)].assign(static_cast<size_t>(std::max(1, o.array_size)), 0);
  }
  return s;
}

int64_t Store::get(int obj, int64_t index) const {
  const auto& v = values.at(static_cast<size_t>(obj));
  if (v.empty()) return 0;
  if (index < 0 && v.size() == 1) return v[0];
  return v[static_cast<size_t>(index_mod(index, static_cast<int>(v.size())))];
}

void Store::set(int obj, int64_t index, int64_t val) {
  auto& v = values.at(static_cast<size_t>(obj));
  if (v.empty()) v.assign(1, 0);
  if (index < 0 && v.size() == 1) {
    v[0] = val;
    return;
  }
  v[static_cast<size_t>(index_mod(index, static_cast<int>(v.size())))] = val;
}

int64_t merge_write(const TypedModule& m, const TLhs& l, int64_t old, int64_t v) {
  DataType t = m.obj(l.obj).type;
  if (l.lo < 0) return convert(l.type, t, v);
  int w = l.hi - l.lo + 1;
  uint64_t mask = w >= 64 ? ~0ull : ((1ull << w) - 1);
  uint64_t word = static_cast<uint64_t>(old) & ~(mask << l.lo);
  word |= (static_cast<uint64_t>(v) & mask) << l.lo;
  return wrap(t, static_cast<int64_t>(word));
}

namespace {

struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StepLimit {};

class Interp {
 public:
  Interp(const TypedModule& m, Store s, int64_t max) : m_(m), store_(std::move(s)), max_(max) {}

  /// Returns the id of an exception leaving the block, 0 otherwise.
  int block(const TBlock& b) {
    for (const auto& s : b)
      if (int e = stmt(*s)) return e;
    return 0;
  }

  Store& store() { return store_; }
  int64_t steps() const { return steps_; }

 private:
  const TypedModule& m_;
  Store store_;
  int64_t max_;
  int64_t steps_ = 0;

  void tick() {
    if (++steps_ > max_) throw StepLimit{};
  }

  int64_t eval(const TExpr& e) {
    return eval_expr(e, [&](int obj, int64_t idx) -> int64_t {
      const Object& o = m_.obj(obj);
      if (!o.is_storage()) throw Unsupported("read of " + std::string(obj_kind_name(o.kind)) + " '" + o.name + "'");
      return store_.get(obj, idx);
    });
  }

  struct Pending {
    TLhs lhs;
    int64_t index;
    int64_t value;
  };

  Pending prepare(const TLhs& l, const TExpr& rhs) {
    return {l, l.index ? eval(*l.index) : -1, eval(rhs)};
  }

  void commit(const Pending& p) {
    const Object& o = m_.obj(p.lhs.obj);
    if (!o.is_storage()) throw Unsupported("write to " + std::string(obj_kind_name(o.kind)) + " '" + o.name + "'");
    int64_t old = store_.get(p.lhs.obj, p.index);
    store_.set(p.lhs.obj, p.index, merge_write(m_, p.lhs, old, p.value));
  }

  void write_loop(int obj, int64_t v) { store_.set(obj, -1, wrap(m_.obj(obj).type, v)); }

  int stmt(const TStmt& s) {
    tick();
    switch (s.kind) {
      case TStmtKind::Assign: commit(prepare(s.lhs, *s.rhs)); return 0;
      case TStmtKind::Bind: {
        std::vector<Pending> ps;
        for (const auto& a : s.body) ps.push_back(prepare(a->lhs, *a->rhs));
        for (const auto& p : ps) commit(p);
        return 0;
      }
      case TStmtKind::If: return eval(*s.cond) ? block(s.body) : block(s.else_b);
      case TStmtKind::Match: {
        int64_t v = eval(*s.cond);
        for (const auto& a : s.arms) {
          bool hit = a.others;
          for (const auto& c : a.choices) hit = hit || (v >= c.lo && v <= c.hi);
          if (hit) return block(a.body);
        }
        return 0;
      }
      case TStmtKind::For: {
        DataType t = m_.obj(s.loop_obj).type;
        write_loop(s.loop_obj, eval(*s.from));
        while (true) {
          tick();
          int64_t i = store_.get(s.loop_obj);
          int64_t to = eval(*s.to);
          if (s.downto ? !(i >= to) : !(to >= i)) break;
          if (int e = block(s.body)) return e;
          i = store_.get(s.loop_obj);
          write_loop(s.loop_obj, eval_binary(s.downto ? Op::Sub : Op::Add, t, i, t, s.step));
        }
        return 0;
      }
      case TStmtKind::While:
        while (true) {
          tick();
          if (!eval(*s.cond)) return 0;
          if (int e = block(s.body)) return e;
        }
      case TStmtKind::Always:
        while (true) {
          tick();
          if (int e = block(s.body)) return e;
        }
      case TStmtKind::Wait: return 0;
      case TStmtKind::WaitCond:
        while (!eval(*s.cond)) {
          tick();
          if (s.else_b.empty()) throw Unsupported("wait condition can never become true");
          block(s.else_b);
        }
        return block(s.body);
      case TStmtKind::Raise: return s.exc;
      case TStmtKind::Try: {
        int e = block(s.body);
        if (!e) return 0;
        for (const auto& h : s.handlers) {
          bool hit = h.others;
          for (int x : h.excs) hit = hit || x == e;
          if (hit) return block(h.body);
        }
        return e;
      }
      case TStmtKind::Call: {
        const TFunction& f = m_.functions.at(static_cast<size_t>(s.obj));
        for (size_t i = 0; i < s.args.size(); ++i) {
          int a = f.args[i];
          store_.set(a, -1, convert(s.args[i]->type, m_.obj(a).type, eval(*s.args[i])));
        }
        if (int e = block(m_.processes.at(static_cast<size_t>(f.process)).body)) return e;
        for (size_t i = 0; i < s.dsts.size(); ++i) {
          int r = f.rets[i];
          TLhs l = s.dsts[i];
          int64_t idx = l.index ? eval(*l.index) : -1;
          int64_t v = convert(m_.obj(r).type, l.type, store_.get(r));
          commit({l, idx, v});
        }
        return 0;
      }
      case TStmtKind::Method:
        throw Unsupported("method '" + s.method + "' of '" + m_.obj(s.obj).name + "'");
    }
    return 0;
  }
};

}  // namespace

InterpResult interpret_ast(const TypedModule& m, const TBlock& body, Store store, int64_t max_steps) {
  Interp in(m, std::move(store), max_steps);
  InterpResult r;
  try {
    r.exception = in.block(body);
    r.completed = true;
  } catch (const Unsupported& e) {
    r.error = e.what();
  } catch (const StepLimit&) {
    r.error = "step limit reached";
  }
  r.steps = in.steps();
  r.store = std::move(in.store());
  return r;
}

InterpResult interpret_process(const TypedModule& m, const std::string& process, int64_t max_steps) {
  int p = m.find_process(process);
  if (p < 0) throw std::invalid_argument("no process '" + process + "'");
  return interpret_ast(m, m.processes[static_cast<size_t>(p)].body, Store::zero(m), max_steps);
}

}  // namespace hls

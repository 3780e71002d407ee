#include "hls/rsopt.hpp"

#include <algorithm>
#include <sstream>

#include "hls/sema.hpp"

namespace hls {

std::string_view barrier_name(Barrier b) {
  switch (b) {
    case Barrier::BlockEnd: return "block-end";
    case Barrier::Branch: return "branch";
    case Barrier::Loop: return "loop";
    case Barrier::Guarded: return "guarded-access";
  }
  return "?";
}

// ------------------------------------------------------------ simplify

namespace {

void collect_terms(const TExprP& x, DataType t, int sign, std::vector<std::pair<int, TExprP>>& terms, uint64_t& c) {
  if (x->type == t && x->kind == TExprKind::Binary && (x->op == Op::Add || x->op == Op::Sub)) {
    collect_terms(x->args[0], t, sign, terms, c);
    collect_terms(x->args[1], t, x->op == Op::Sub ? -sign : sign, terms, c);
    return;
  }
  if (x->kind == TExprKind::Const) {
    uint64_t v = static_cast<uint64_t>(x->value);
    c = sign > 0 ? c + v : c - v;
    return;
  }
  if (x->type == t && x->kind == TExprKind::Unary && x->op == Op::Neg) {
    collect_terms(x->args[0], t, -sign, terms, c);
    return;
  }
  terms.emplace_back(sign, x);
}

TExprP reassociate(const TExprP& e) {
  DataType t = e->type;
  std::vector<std::pair<int, TExprP>> terms;
  uint64_t c = 0;
  collect_terms(e, t, 1, terms, c);
  int64_t cw = wrap(t, static_cast<int64_t>(c));
  if (terms.empty()) return make_const(t, cw);
  TExprP acc;
  size_t first = terms.size();
  for (size_t i = 0; i < terms.size(); ++i)
    if (terms[i].first > 0) {
      first = i;
      break;
    }
  if (first == terms.size()) {
    acc = make_unary(Op::Neg, t, terms[0].second);
    first = 0;
  } else {
    acc = terms[first].second;
  }
  for (size_t i = 0; i < terms.size(); ++i) {
    if (i == first) continue;
    acc = make_binary(terms[i].first > 0 ? Op::Add : Op::Sub, t, acc, terms[i].second);
  }
  if (cw != 0) {
    int64_t neg = wrap(t, static_cast<int64_t>(0u - c));
    bool use_sub;
    if (t.base == BaseType::Int) use_sub = cw < 0 && neg > 0;
    else use_sub = static_cast<uint64_t>(neg) < static_cast<uint64_t>(cw);
    acc = use_sub ? make_binary(Op::Sub, t, acc, make_const(t, neg)) : make_binary(Op::Add, t, acc, make_const(t, cw));
  }
  return acc;
}

TExprP simplify_rec(const TExprP& e) {
  if (!e || e->args.empty()) return e;
  std::vector<TExprP> args;
  bool changed = false;
  for (const auto& a : e->args) {
    args.push_back(simplify_rec(a));
    changed = changed || args.back() != a;
  }
  TExprP x = e;
  if (changed) {
    auto c = std::make_shared<TExpr>(*e);
    c->args = std::move(args);
    x = c;
  }
  x = fold_expr(x);
  if (x->kind == TExprKind::Binary && (x->op == Op::Add || x->op == Op::Sub) && x->type.base != BaseType::Bool)
    return reassociate(x);
  return x;
}

}  // namespace

TExprP simplify(const TExprP& e) { return simplify_rec(e); }

// ------------------------------------------------------ reference stack

bool ReferenceStack::trackable(int obj) const {
  const Object& o = m_.obj(obj);
  return o.kind == ObjKind::Reg && !o.global && o.array_size == 0 && !o.exported;
}

TExprP ReferenceStack::substitute(const TExprP& e) const {
  if (!e) return e;
  if (e->kind == TExprKind::Obj) {
    auto it = top_.find(e->obj);
    if (it != top_.end()) return it->second.expr;
    return e;
  }
  if (e->args.empty()) return e;
  std::vector<TExprP> args;
  bool changed = false;
  for (const auto& a : e->args) {
    args.push_back(substitute(a));
    changed = changed || args.back() != a;
  }
  if (!changed) return e;
  auto c = std::make_shared<TExpr>(*e);
  c->args = std::move(args);
  return c;
}

void ReferenceStack::assign(int obj, const TExprP& e) {
  Entry en;
  std::vector<int> reads;
  collect_expr_reads(*e, reads);
  for (int y : reads) {
    auto it = top_.find(y);
    if (it != top_.end()) en.refs.insert(it->second.refs.begin(), it->second.refs.end());
    en.refs.insert({y, version_[y]});
  }
  en.expr = simplify(substitute(e));
  en.version = ++version_[obj];
  en.order = counter_++;
  auto old = top_.find(obj);
  if (old != top_.end()) en.history = old->second.history;
  en.history.push_back(expr_text(m_, *en.expr));
  top_[obj] = std::move(en);
}

TBlock ReferenceStack::flush(Barrier kind, const std::set<int>* only, const std::set<int>* live) {
  std::set<int> sel;
  if (!only) {
    for (const auto& [o, _] : top_) sel.insert(o);
  } else {
    std::set<int> touched(only->begin(), only->end());
    for (int o : *only)
      if (top_.count(o)) sel.insert(o);
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& [o, en] : top_) {
        if (sel.count(o)) continue;
        std::vector<int> leaves;
        collect_expr_reads(*en.expr, leaves);
        bool hit = std::any_of(leaves.begin(), leaves.end(), [&](int y) { return touched.count(y) > 0; });
        if (hit) {
          sel.insert(o);
          touched.insert(o);
          grew = true;
        }
      }
      for (int o : sel) touched.insert(o);
    }
  }
  if (sel.empty()) return {};
  {
    std::ostringstream os;
    os << "flush " << barrier_name(kind) << ":";
    for (int o : sel) {
      os << " " << m_.obj(o).name << "=[";
      const auto& h = top_[o].history;
      for (auto it = h.rbegin(); it != h.rend(); ++it) os << "RS_expr(" << *it << ") ";
      os << "RS_self]";
    }
    log_.push_back(os.str());
  }

  // dead entries are dropped
  std::vector<int> nodes;
  for (int o : sel)
    if (!live || !trackable(o) || live->count(o)) nodes.push_back(o);

  // ordering: readers of an older version first, readers of the final version after
  std::map<int, std::set<int>> succ;
  std::map<int, int> indeg;
  for (int o : nodes) indeg[o] = 0;
  for (int p : nodes) {
    for (const auto& [y, v] : top_[p].refs) {
      if (y == p || !indeg.count(y)) continue;
      int fin = top_[y].version;
      int from = v < fin ? p : y;
      int to = v < fin ? y : p;
      if (succ[from].insert(to).second) ++indeg[to];
    }
  }
  TBlock out;
  std::set<int> done;
  while (done.size() < nodes.size()) {
    int pick = -1;
    for (int o : nodes) {
      if (done.count(o) || indeg[o] != 0) continue;
      if (pick < 0 || top_[o].order < top_[pick].order) pick = o;
    }
    if (pick < 0) break;
    done.insert(pick);
    for (int s : succ[pick]) --indeg[s];
    auto st = std::make_shared<TStmt>();
    st->kind = TStmtKind::Assign;
    st->lhs.obj = pick;
    st->lhs.type = m_.obj(pick).type;
    st->rhs = top_[pick].expr;
    out.push_back(st);
  }
  if (done.size() < nodes.size()) {
    // cyclic reads of stored values: commit the rest atomically
    auto b = std::make_shared<TStmt>();
    b->kind = TStmtKind::Bind;
    std::vector<int> rest;
    for (int o : nodes)
      if (!done.count(o)) rest.push_back(o);
    std::sort(rest.begin(), rest.end(), [&](int a, int c) { return top_[a].order < top_[c].order; });
    for (int o : rest) {
      auto st = std::make_shared<TStmt>();
      st->kind = TStmtKind::Assign;
      st->lhs.obj = o;
      st->lhs.type = m_.obj(o).type;
      st->rhs = top_[o].expr;
      b->body.push_back(st);
    }
    out.push_back(b);
  }
  for (int o : sel) top_.erase(o);
  return out;
}

std::string ReferenceStack::dump() const {
  std::ostringstream os;
  for (const auto& [o, en] : top_) {
    os << m_.obj(o).name << ":";
    for (auto it = en.history.rbegin(); it != en.history.rend(); ++it) os << " RS_expr(" << *it << ")";
    os << " RS_self\n";
  }
  return os.str();
}

// ------------------------------------------------------------ optimizer

namespace {

class Optimizer {
 public:
  Optimizer(const TypedModule& m, const RsOptions& opt) : m_(m), opt_(opt) {}

  std::vector<std::string> log;

  bool local_only(const TExprP& e) const {
    if (!e) return true;
    bool ok = true;
    visit_exprs(*e, [&](const TExpr& x) {
      if (x.kind != TExprKind::Obj && x.kind != TExprKind::Elem) return;
      const Object& o = m_.obj(x.obj);
      if (o.kind != ObjKind::Reg || o.global) ok = false;
    });
    return ok;
  }

  static std::set<int> stmt_refs(const TStmtP& s) {
    std::vector<int> v;
    collect_reads({s}, v);
    collect_writes({s}, v);
    visit_stmts({s}, [&](const TStmt& x) {
      if (x.kind == TStmtKind::Assign && x.lhs.index) collect_expr_reads(*x.lhs.index, v);
    });
    return {v.begin(), v.end()};
  }

  static std::set<int> reads_of(const TBlock& b) {
    std::vector<int> v;
    collect_reads(b, v);
    return {v.begin(), v.end()};
  }

  TBlock block(const TBlock& b, const std::set<int>& live_out) {
    ReferenceStack rs(m_);
    const size_t n = b.size();
    std::vector<std::set<int>> live(n + 1);
    live[n] = live_out;
    for (size_t i = n; i-- > 0;) {
      live[i] = live[i + 1];
      auto r = reads_of({b[i]});
      live[i].insert(r.begin(), r.end());
    }
    TBlock out;
    auto append = [&](TBlock f) { out.insert(out.end(), f.begin(), f.end()); };

    for (size_t i = 0; i < n; ++i) {
      const TStmtP& s = b[i];
      const std::set<int>& here = live[i];
      switch (s->kind) {
        case TStmtKind::Assign: {
          if (!local_only(s->rhs) || !local_only(s->lhs.index)) {
            append(rs.flush(Barrier::Guarded, nullptr, &here));
            out.push_back(s);
            break;
          }
          const TLhs& l = s->lhs;
          if (rs.trackable(l.obj) && l.lo < 0 && !l.index) {
            TExprP trial = simplify(rs.substitute(s->rhs));
            if (expr_size(*trial) > opt_.max_expr_nodes) {
              std::vector<int> r;
              collect_expr_reads(*s->rhs, r);
              std::set<int> only(r.begin(), r.end());
              append(rs.flush(Barrier::BlockEnd, &only, &here));
            }
            rs.assign(l.obj, s->rhs);
            break;
          }
          std::set<int> only{l.obj};
          append(rs.flush(Barrier::Guarded, &only, &here));
          auto c = std::make_shared<TStmt>(*s);
          c->rhs = simplify(rs.substitute(s->rhs));
          if (c->lhs.index) c->lhs.index = simplify(rs.substitute(c->lhs.index));
          out.push_back(c);
          break;
        }
        case TStmtKind::Wait: out.push_back(s); break;
        case TStmtKind::Method:
        case TStmtKind::Call:
        case TStmtKind::Raise:
          append(rs.flush(Barrier::Guarded, nullptr, &here));
          out.push_back(s);
          break;
        default: {
          std::set<int> refs = stmt_refs(s);
          bool loop = s->kind == TStmtKind::For || s->kind == TStmtKind::While || s->kind == TStmtKind::Always;
          bool guarded = s->kind == TStmtKind::WaitCond || s->kind == TStmtKind::Try;
          if (s->kind == TStmtKind::Bind || guarded) {
            // conservatively flush everything that could be observed
            append(rs.flush(Barrier::Guarded, guarded ? nullptr : &refs, &here));
          } else {
            append(rs.flush(loop ? Barrier::Loop : Barrier::Branch, &refs, &here));
          }
          out.push_back(nested(s, live[i + 1]));
          break;
        }
      }
    }
    append(rs.flush(Barrier::BlockEnd, nullptr, &live_out));
    log.insert(log.end(), rs.log().begin(), rs.log().end());
    return out;
  }

  TStmtP nested(const TStmtP& s, const std::set<int>& after) {
    auto c = std::make_shared<TStmt>(*s);
    auto self = reads_of({s});
    std::set<int> again = after;
    again.insert(self.begin(), self.end());
    switch (s->kind) {
      case TStmtKind::If:
        c->body = block(s->body, after);
        c->else_b = block(s->else_b, after);
        break;
      case TStmtKind::Match:
        for (auto& a : c->arms) a.body = block(a.body, after);
        break;
      case TStmtKind::For:
      case TStmtKind::While:
      case TStmtKind::Always: c->body = block(s->body, again); break;
      case TStmtKind::Try: {
        std::set<int> h = after;
        for (const auto& x : s->handlers) {
          auto r = reads_of(x.body);
          h.insert(r.begin(), r.end());
        }
        c->body = block(s->body, h);
        for (auto& x : c->handlers) x.body = block(x.body, after);
        break;
      }
      case TStmtKind::WaitCond:
        c->body = block(s->body, after);
        c->else_b = block(s->else_b, again);
        break;
      default: break;
    }
    return c;
  }

 private:
  const TypedModule& m_;
  const RsOptions& opt_;
};

}  // namespace

RsResult optimize_process(const TypedModule& m, const TBlock& body, const RsOptions& opt) {
  Optimizer o(m, opt);
  RsResult r;
  r.body = o.block(body, opt.live_out);
  if (opt.keep_log) r.log = std::move(o.log);
  return r;
}

TypedModule optimize_module(TypedModule m) {
  for (auto& p : m.processes) p.body = optimize_process(m, p.body).body;
  return m;
}

}  // namespace hls

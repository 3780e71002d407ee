#include <algorithm>
#include <set>

#include "hls/sema.hpp"

namespace hls {

namespace {

bool all_const(const std::vector<TExprP>& args) {
  return std::all_of(args.begin(), args.end(), [](const TExprP& a) { return a->kind == TExprKind::Const; });
}

TBlock fold_block(const TBlock& b);

TLhs fold_lhs(TLhs l) {
  if (l.index) l.index = fold_expr(l.index);
  return l;
}

/// Folds one statement; the result replaces it in the enclosing block.
void fold_stmt(const TStmtP& s, TBlock& out) {
  auto c = std::make_shared<TStmt>(*s);
  c->lhs = fold_lhs(c->lhs);
  if (c->rhs) c->rhs = fold_expr(c->rhs);
  if (c->cond) c->cond = fold_expr(c->cond);
  if (c->from) c->from = fold_expr(c->from);
  if (c->to) c->to = fold_expr(c->to);
  for (auto& a : c->args) a = fold_expr(a);
  for (auto& d : c->dsts) d = fold_lhs(d);
  c->body = fold_block(c->body);
  c->else_b = fold_block(c->else_b);
  for (auto& a : c->arms) a.body = fold_block(a.body);
  for (auto& h : c->handlers) h.body = fold_block(h.body);

  const bool const_cond = c->cond && c->cond->kind == TExprKind::Const;
  switch (c->kind) {
    case TStmtKind::If:
      if (const_cond) {
        const TBlock& taken = c->cond->value ? c->body : c->else_b;
        out.insert(out.end(), taken.begin(), taken.end());
        return;
      }
      break;
    case TStmtKind::While:
      if (const_cond && c->cond->value == 0) return;
      break;
    case TStmtKind::Match:
      if (const_cond) {
        int64_t v = c->cond->value;
        const TArm* hit = nullptr;
        for (const auto& a : c->arms) {
          for (const auto& ch : a.choices)
            if (v >= ch.lo && v <= ch.hi) hit = &a;
          if (!hit && a.others) hit = &a;
          if (hit) break;
        }
        if (hit) out.insert(out.end(), hit->body.begin(), hit->body.end());
        return;
      }
      break;
    default: break;
  }
  out.push_back(c);
}

TBlock fold_block(const TBlock& b) {
  TBlock out;
  out.reserve(b.size());
  for (const auto& s : b) fold_stmt(s, out);
  return out;
}

/// Removes assignments to `dead` objects. Returns false if some write could
/// not be removed (side effects or call results).
bool strip_writes(const TypedModule& m, TBlock& b, const std::set<int>& dead) {
  bool ok = true;
  TBlock out;
  for (const auto& s : b) {
    auto c = std::make_shared<TStmt>(*s);
    if (c->kind == TStmtKind::Assign && dead.count(c->lhs.obj)) {
      bool pure = is_pure(m, *c->rhs) && (!c->lhs.index || is_pure(m, *c->lhs.index));
      if (pure) continue;
      ok = false;
    }
    for (const auto& d : c->dsts)
      if (dead.count(d.obj)) ok = false;
    ok = strip_writes(m, c->body, dead) && ok;
    ok = strip_writes(m, c->else_b, dead) && ok;
    for (auto& a : c->arms) ok = strip_writes(m, a.body, dead) && ok;
    for (auto& h : c->handlers) ok = strip_writes(m, h.body, dead) && ok;
    if (c->kind == TStmtKind::Bind && c->body.empty()) continue;
    out.push_back(c);
  }
  b = std::move(out);
  return ok;
}

void escapes(const TypedModule& m, const TBlock& b, std::set<int>& out, std::set<int>& visiting) {
  for (const auto& s : b) {
    switch (s->kind) {
      case TStmtKind::Raise: out.insert(s->exc); break;
      case TStmtKind::Call: {
        const TFunction& f = m.functions.at(static_cast<size_t>(s->obj));
        if (visiting.insert(s->obj).second) {
          escapes(m, m.processes.at(static_cast<size_t>(f.process)).body, out, visiting);
          visiting.erase(s->obj);
        }
        break;
      }
      case TStmtKind::Try: {
        std::set<int> inner;
        escapes(m, s->body, inner, visiting);
        for (const auto& h : s->handlers) {
          if (h.others) inner.clear();
          for (int e : h.excs) inner.erase(e);
        }
        out.insert(inner.begin(), inner.end());
        for (const auto& h : s->handlers) escapes(m, h.body, out, visiting);
        break;
      }
      default:
        escapes(m, s->body, out, visiting);
        escapes(m, s->else_b, out, visiting);
        for (const auto& a : s->arms) escapes(m, a.body, out, visiting);
        break;
    }
  }
}

}  // namespace

TExprP fold_expr(const TExprP& e) {
  if (!e || e->args.empty()) return e;
  std::vector<TExprP> args;
  bool changed = false;
  for (const auto& a : e->args) {
    args.push_back(fold_expr(a));
    changed = changed || args.back() != a;
  }
  if (e->kind != TExprKind::Elem && all_const(args)) {
    TExpr tmp = *e;
    tmp.args = args;
    int64_t v = eval_expr(tmp, [](int, int64_t) -> int64_t { return 0; });
    return make_const(e->type, v);
  }
  if (!changed) return e;
  auto c = std::make_shared<TExpr>(*e);
  c->args = std::move(args);
  return c;
}

bool is_pure(const TypedModule& m, const TExpr& e) {
  bool pure = true;
  visit_exprs(e, [&](const TExpr& x) {
    if (x.kind != TExprKind::Obj && x.kind != TExprKind::Elem) return;
    ObjKind k = m.obj(x.obj).kind;
    if (k == ObjKind::Queue || k == ObjKind::Channel) pure = false;
  });
  return pure;
}

std::vector<int> escaping_exceptions(const TypedModule& m, const TBlock& b) {
  std::set<int> out, visiting;
  escapes(m, b, out, visiting);
  return {out.begin(), out.end()};
}

std::vector<int> object_accessors(const TypedModule& m, int obj) {
  std::vector<int> out;
  for (size_t p = 0; p < m.processes.size(); ++p) {
    const TProcess& proc = m.processes[p];
    bool hit = false;
    std::vector<int> objs;
    collect_reads(proc.body, objs);
    collect_writes(proc.body, objs);
    hit = std::find(objs.begin(), objs.end(), obj) != objs.end();
    visit_stmts(proc.body, [&](const TStmt& s) {
      if (s.kind == TStmtKind::Method && s.obj == obj) hit = true;
      if (s.kind == TStmtKind::Call) {
        const TFunction& f = m.functions.at(static_cast<size_t>(s.obj));
        if (f.lock == obj || f.exc == obj || m.processes.at(static_cast<size_t>(f.process)).obj == obj) hit = true;
        for (int a : f.args) hit = hit || a == obj;
        for (int r : f.rets) hit = hit || r == obj;
      }
    });
    if (proc.function >= 0) {
      const TFunction& f = m.functions.at(static_cast<size_t>(proc.function));
      if (f.exc == obj || f.lock == obj) hit = true;
      for (int a : f.args) hit = hit || a == obj;
      for (int r : f.rets) hit = hit || r == obj;
    }
    if (hit) out.push_back(static_cast<int>(p));
  }
  return out;
}

TypedModule fold_constants(TypedModule m, DiagSink& diags) {
  for (auto& p : m.processes) p.body = fold_block(p.body);

  for (auto& p : m.processes) {
    bool again = true;
    while (again) {
      again = false;
      std::vector<int> reads;
      collect_reads(p.body, reads);
      std::set<int> read_set(reads.begin(), reads.end());
      std::set<int> dead;
      for (int id : p.locals) {
        const Object& o = m.obj(id);
        if (o.dead || o.exported || o.inferred || !o.is_storage() || o.kind == ObjKind::Sig) continue;
        if (!read_set.count(id)) dead.insert(id);
      }
      if (dead.empty()) break;
      TBlock trial = p.body;
      if (!strip_writes(m, trial, dead)) {
        // keep objects whose writes must stay; retry with the rest
        std::vector<int> writes;
        std::set<int> keep;
        visit_stmts(p.body, [&](const TStmt& s) {
          if (s.kind == TStmtKind::Assign && dead.count(s.lhs.obj) &&
              !(is_pure(m, *s.rhs) && (!s.lhs.index || is_pure(m, *s.lhs.index))))
            keep.insert(s.lhs.obj);
          for (const auto& d : s.dsts)
            if (dead.count(d.obj)) keep.insert(d.obj);
        });
        for (int k : keep) dead.erase(k);
        if (dead.empty()) break;
        trial = p.body;
        strip_writes(m, trial, dead);
      }
      p.body = std::move(trial);
      for (int id : dead) {
        Object& o = m.objects[static_cast<size_t>(id)];
        o.dead = true;
        std::string msg = "removed unused object '" + o.name + "' in process " + p.name;
        diags.note(o.loc, msg);
        m.notes.push_back({Severity::Note, o.loc, msg});
      }
      p.locals.erase(std::remove_if(p.locals.begin(), p.locals.end(), [&](int id) { return dead.count(id) > 0; }),
                     p.locals.end());
      again = true;
    }
  }
  return m;
}

}  // namespace hls

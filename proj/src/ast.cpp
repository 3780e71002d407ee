#include "hls/ast.hpp"

namespace hls::ast {

namespace {

template <typename T>
bool eq_ptr(const std::shared_ptr<const T>& a, const std::shared_ptr<const T>& b) {
  if (!a || !b) return !a && !b;
  return equal(*a, *b);
}

template <typename T>
bool eq_vec(const std::vector<std::shared_ptr<const T>>& a,
            const std::vector<std::shared_ptr<const T>>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!eq_ptr(a[i], b[i])) return false;
  return true;
}

bool eq_params(const Params& a, const Params& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].name != b[i].name || !eq_ptr(a[i].value, b[i].value)) return false;
  return true;
}

bool eq_type(const TypeSpec& a, const TypeSpec& b) {
  return a.name == b.name && eq_ptr(a.width, b.width);
}

bool eq_body(const Body& a, const Body& b) {
  return eq_vec(a.decls, b.decls) && eq_vec(a.stmts, b.stmts);
}

}  // namespace

bool equal(const Expr& a, const Expr& b) {
  return a.kind == b.kind && a.value == b.value && a.width == b.width && a.downto == b.downto &&
         (a.kind != ExprKind::Unary && a.kind != ExprKind::Binary ? true : a.op == b.op) &&
         a.name == b.name && eq_vec(a.args, b.args);
}

bool equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.downto != b.downto || a.name != b.name) return false;
  if (!eq_vec(a.lhs, b.lhs) || !eq_ptr(a.expr, b.expr) || !eq_ptr(a.expr2, b.expr2) ||
      !eq_ptr(a.step, b.step) || !eq_vec(a.args, b.args) || !eq_vec(a.body, b.body) ||
      !eq_ptr(a.then_s, b.then_s) || !eq_ptr(a.else_s, b.else_s) || !eq_params(a.params, b.params))
    return false;
  if (a.arms.size() != b.arms.size() || a.handlers.size() != b.handlers.size()) return false;
  for (size_t i = 0; i < a.arms.size(); ++i) {
    const auto& x = a.arms[i];
    const auto& y = b.arms[i];
    if (x.others != y.others || x.choices.size() != y.choices.size() || !eq_ptr(x.body, y.body))
      return false;
    for (size_t k = 0; k < x.choices.size(); ++k) {
      if (!eq_ptr(x.choices[k].lo, y.choices[k].lo) || !eq_ptr(x.choices[k].hi, y.choices[k].hi) ||
          x.choices[k].downto != y.choices[k].downto)
        return false;
    }
  }
  for (size_t i = 0; i < a.handlers.size(); ++i) {
    const auto& x = a.handlers[i];
    const auto& y = b.handlers[i];
    if (x.others != y.others || x.names != y.names || !eq_ptr(x.body, y.body)) return false;
  }
  return true;
}

bool equal(const Decl& a, const Decl& b) {
  if (a.kind != b.kind || a.names != b.names || a.obj != b.obj || a.arr != b.arr ||
      a.tclass != b.tclass || !eq_type(a.type, b.type) || a.type_name != b.type_name ||
      a.block != b.block || !eq_ptr(a.init, b.init) || !eq_vec(a.sizes, b.sizes) ||
      !eq_body(a.body, b.body) || !eq_ptr(a.stmt, b.stmt) || !eq_params(a.params, b.params))
    return false;
  if (a.fields.size() != b.fields.size()) return false;
  for (size_t i = 0; i < a.fields.size(); ++i) {
    const auto& x = a.fields[i];
    const auto& y = b.fields[i];
    if (x.name != y.name || !eq_type(x.type, y.type) || !eq_ptr(x.lo, y.lo) ||
        !eq_ptr(x.hi, y.hi) || x.downto != y.downto || x.dir != y.dir)
      return false;
  }
  auto eq_formals = [](const std::vector<Formal>& x, const std::vector<Formal>& y) {
    if (x.size() != y.size()) return false;
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i].name != y[i].name || x[i].typed != y[i].typed || !eq_type(x[i].type, y[i].type))
        return false;
    return true;
  };
  return eq_formals(a.formals, b.formals) && eq_formals(a.returns, b.returns);
}

bool equal(const Module& a, const Module& b) { return eq_vec(a.decls, b.decls); }

const Param* find_param(const Params& ps, const std::string& name) {
  for (const auto& p : ps) {
    if (p.name == name) return &p;
    auto dot = p.name.rfind('.');
    if (dot != std::string::npos && p.name.substr(dot + 1) == name) return &p;
  }
  return nullptr;
}

bool has_flag(const Params& ps, const std::string& name) {
  const Param* p = find_param(ps, name);
  if (!p) return false;
  if (!p->value) return true;
  if (p->value->kind == ExprKind::Bool) return p->value->value != 0;
  return true;
}

}  // namespace hls::ast

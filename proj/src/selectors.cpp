#include "ncgwc/selectors.hpp"

namespace ncgwc {

AffineVec unit_selector(int dim, int index) {
  AffineVec v(dim);
  v[index].c0 = 1.0;
  return v;
}

AffineVec zero_selector(int dim) { return AffineVec(dim); }

namespace {

void add_term(AffineScalar& s, VarId var, double coef) {
  if (coef == 0.0) return;
  for (auto& [v, c] : s.terms) {
    if (v == var) {
      c += coef;
      return;
    }
  }
  s.terms.push_back({var, coef});
}

}  // namespace

AffineVec add_scaled(const AffineVec& u, const AffineVec& v, double scale) {
  if (u.size() != v.size()) throw std::invalid_argument("selector size mismatch");
  AffineVec out = u;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i].c0 += scale * v[i].c0;
    for (const auto& [var, c] : v[i].terms) add_term(out[i], var, scale * c);
  }
  return out;
}

AffineVec add_var_multiple(const AffineVec& u, const AffineVec& v, VarId var) {
  if (u.size() != v.size()) throw std::invalid_argument("selector size mismatch");
  AffineVec out = u;
  for (size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_constant()) {
      throw std::invalid_argument("add_var_multiple: scaled selector must be constant");
    }
    add_term(out[i], var, v[i].c0);
  }
  return out;
}

AffineVec subtract(const AffineVec& u, const AffineVec& v) { return add_scaled(u, v, -1.0); }

Vec eval_selector(const AffineVec& u, const Point& x) {
  Vec out(static_cast<int>(u.size()));
  for (size_t i = 0; i < u.size(); ++i) out(static_cast<int>(i)) = u[i].eval(x);
  return out;
}

QuadExpr tr_gram_outer(const GramLayout& gram, const AffineVec& u, const AffineVec& v) {
  if (static_cast<int>(u.size()) != gram.dim || static_cast<int>(v.size()) != gram.dim) {
    throw std::invalid_argument("tr_gram_outer: selector/Gram size mismatch");
  }
  QuadExpr e;
  for (int a = 0; a < gram.dim; ++a) {
    const AffineScalar& ua = u[a];
    if (ua.c0 == 0.0 && ua.terms.empty()) continue;
    for (int b = 0; b < gram.dim; ++b) {
      const AffineScalar& vb = v[b];
      if (vb.c0 == 0.0 && vb.terms.empty()) continue;
      const VarId gv = gram.gvar(a, b);
      // (c0a + sum ta)(c0b + sum tb) * G_ab
      e.add_lin(gv, ua.c0 * vb.c0);
      for (const auto& [var, c] : ua.terms) e.add_quad(var, gv, c * vb.c0);
      for (const auto& [var, c] : vb.terms) e.add_quad(var, gv, ua.c0 * c);
      if (!ua.terms.empty() && !vb.terms.empty()) {
        throw std::logic_error(
            "tr_gram_outer: cubic term; introduce a degree-reduction duplicate first");
      }
    }
  }
  return e;
}

QuadExpr outer_entry(const AffineVec& u, const AffineVec& v, int a, int b) {
  // (u o v)_{ab} = (u_a v_b + u_b v_a) / 2
  QuadExpr e;
  auto add_product = [&e](const AffineScalar& p, const AffineScalar& q, double scale) {
    e.add_constant(scale * p.c0 * q.c0);
    for (const auto& [var, c] : p.terms) e.add_lin(var, scale * c * q.c0);
    for (const auto& [var, c] : q.terms) e.add_lin(var, scale * p.c0 * c);
    for (const auto& [v1, c1] : p.terms)
      for (const auto& [v2, c2] : q.terms) e.add_quad(v1, v2, scale * c1 * c2);
  };
  add_product(u[a], v[b], 0.5);
  add_product(u[b], v[a], 0.5);
  return e;
}

QuadExpr value_difference(VarId f_i, VarId f_j) {
  QuadExpr e;
  if (f_j >= 0) e.add_lin(f_j, 1.0);
  if (f_i >= 0) e.add_lin(f_i, -1.0);
  return e;
}

}  // namespace ncgwc

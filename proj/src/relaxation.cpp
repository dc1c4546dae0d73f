#include "ncgwc/relaxation.hpp"

#include <cmath>
#include <set>

namespace ncgwc {

std::pair<double, double> product_interval(double lu, double uu, double lv, double uv,
                                           bool square) {
  if (square) {
    const double m = std::max(lu * lu, uu * uu);
    const double lo = (lu <= 0.0 && uu >= 0.0) ? 0.0 : std::min(lu * lu, uu * uu);
    return {lo, m};
  }
  const double c[4] = {lu * lv, lu * uv, uu * lv, uu * uv};
  return {std::min(std::min(c[0], c[1]), std::min(c[2], c[3])),
          std::max(std::max(c[0], c[1]), std::max(c[2], c[3]))};
}

int Lifting::product(VarId a, VarId b) {
  if (a > b) std::swap(a, b);
  const auto it = prod_index_.find({a, b});
  if (it != prod_index_.end()) return it->second;
  const int idx = static_cast<int>(prods_.size());
  prods_.push_back({a, b});
  prod_index_[{a, b}] = idx;
  return idx;
}

void Lifting::lift_into(const QuadExpr& e, std::vector<std::pair<int, double>>& terms,
                        double& c0) {
  c0 = e.constant;
  std::map<int, double> acc;
  for (const auto& [v, c] : e.lin) acc[v] += c;
  for (const auto& [k, c] : e.quad) acc[n_orig_ + product(k.first, k.second)] += c;
  terms.assign(acc.begin(), acc.end());
}

Lifting::Lifting(const QcqpProblem& p, bool rlt) : p_(&p), n_orig_(p.num_vars()) {
  // lifted constraint rows (skipping the Gram-factor block)
  for (const auto& con : p.cons) {
    if (con.psd_factor) continue;
    LpRow row;
    row.sense = con.sense == Sense::LE ? Sense::LE : (con.sense == Sense::GE ? Sense::GE : Sense::EQ);
    double c0 = 0.0;
    lift_into(con.expr, row.terms, c0);
    row.rhs = -c0;
    base_rows_.push_back(std::move(row));
  }
  {
    base_obj_.assign(n_orig_, 0.0);
    std::vector<std::pair<int, double>> terms;
    double c0 = 0.0;
    lift_into(p.objective, terms, c0);
    base_obj_.resize(n_orig_ + prods_.size(), 0.0);
    obj_c0_ = c0;
    for (const auto& [i, c] : terms) {
      if (i >= static_cast<int>(base_obj_.size())) base_obj_.resize(i + 1, 0.0);
      base_obj_[i] += c;
    }
  }

  if (rlt) {
    // pure-Gram linear equality rows
    std::set<VarId> gram_vars;
    for (int a = 0; a < p.gram.dim; ++a)
      for (int b = a; b < p.gram.dim; ++b) gram_vars.insert(p.gram.g[a][b]);
    std::set<VarId> hvars(p.gram.h.begin(), p.gram.h.end());
    std::vector<const Constraint*> g_rows;
    for (const auto& con : p.cons) {
      if (con.psd_factor || con.sense != Sense::EQ) continue;
      if (!con.expr.is_linear() || con.expr.lin.size() > 8) continue;
      bool pure = true;
      for (const auto& [v, c] : con.expr.lin) pure = pure && gram_vars.count(v) > 0;
      if (pure) g_rows.push_back(&con);
    }
    // scalars: every non-Gram, non-H variable appearing in some product
    std::set<VarId> scalars;
    for (const auto& [a, b] : std::vector<std::pair<VarId, VarId>>(prods_)) {
      for (VarId v : {a, b}) {
        if (!gram_vars.count(v) && !hvars.count(v)) scalars.insert(v);
      }
    }
    for (const Constraint* con : g_rows) {
      for (VarId s : scalars) {
        LpRow row;
        row.sense = Sense::EQ;
        row.rhs = 0.0;
        for (const auto& [v, c] : con->expr.lin) row.terms.push_back({n_orig_ + product(s, v), c});
        row.terms.push_back({s, con->expr.constant});
        base_rows_.push_back(std::move(row));
      }
    }
  }
  base_obj_.resize(n_orig_ + prods_.size(), 0.0);
}

LpProblem Lifting::assemble(const std::vector<double>& lo, const std::vector<double>& hi,
                            const CutPool& cuts) const {
  LpProblem lp;
  const int nw = n_prod();
  lp.n = n_orig_ + nw;
  lp.lo.assign(lo.begin(), lo.end());
  lp.hi.assign(hi.begin(), hi.end());
  lp.obj = base_obj_;
  lp.obj.resize(lp.n, 0.0);
  for (int k = 0; k < nw; ++k) {
    const auto [u, v] = prods_[k];
    const auto [plo, phi] = product_interval(lo[u], hi[u], lo[v], hi[v], u == v);
    lp.lo.push_back(plo);
    lp.hi.push_back(phi);
  }
  lp.rows = base_rows_;
  // McCormick envelopes over the current boxes
  for (int k = 0; k < nw; ++k) {
    const auto [u, v] = prods_[k];
    const int w = n_orig_ + k;
    const double lu = lo[u], uu = hi[u], lv = lo[v], uv = hi[v];
    if (u == v) {
      // convex square: tangents below, secant above
      for (const double t : {lu, uu, 0.5 * (lu + uu)}) {
        lp.add_row({{{u, 2.0 * t}, {w, -1.0}}, Sense::LE, t * t});
      }
      lp.add_row({{{u, -(lu + uu)}, {w, 1.0}}, Sense::LE, -lu * uu});
    } else {
      lp.add_row({{{u, lv}, {v, lu}, {w, -1.0}}, Sense::LE, lu * lv});
      lp.add_row({{{u, uv}, {v, uu}, {w, -1.0}}, Sense::LE, uu * uv});
      lp.add_row({{{u, -lv}, {v, -uu}, {w, 1.0}}, Sense::LE, -uu * lv});
      lp.add_row({{{u, -uv}, {v, -lu}, {w, 1.0}}, Sense::LE, -lu * uv});
    }
  }
  // PSD cuts tr(G yy') >= 0
  for (const Vec& y : cuts.vectors) {
    LpRow row;
    row.sense = Sense::GE;
    row.rhs = 0.0;
    std::map<int, double> acc;
    for (int a = 0; a < p_->gram.dim; ++a) {
      for (int b = a; b < p_->gram.dim; ++b) {
        const double coef = (a == b) ? y(a) * y(a) : 2.0 * y(a) * y(b);
        if (coef != 0.0) acc[p_->gram.g[a][b]] += coef;
      }
    }
    row.terms.assign(acc.begin(), acc.end());
    lp.add_row(std::move(row));
  }
  return lp;
}

LpRow Lifting::objective_cut_row(double at_least) const {
  LpRow row;
  row.sense = Sense::GE;
  row.rhs = at_least - obj_c0_;
  for (size_t i = 0; i < base_obj_.size(); ++i) {
    if (base_obj_[i] != 0.0) row.terms.push_back({static_cast<int>(i), base_obj_[i]});
  }
  return row;
}

double Lifting::product_violation(const std::vector<double>& x, int k) const {
  const auto [u, v] = prods_[k];
  return std::abs(x[n_orig_ + k] - x[u] * x[v]);
}

}  // namespace ncgwc

#pragma once

#include "ncgwc/qcqp.hpp"
#include "ncgwc/simplex_lp.hpp"

namespace ncgwc {

// Linear PSD cuts tr(G yy') >= 0 accumulated across the whole search.
struct CutPool {
  std::vector<Vec> vectors;
  int size() const { return static_cast<int>(vectors.size()); }
};

// Linearization of the QCQP: every bilinear product u*v is replaced by a
// fresh column w constrained by its McCormick envelope over the current
// boxes; the Gram factor rows are dropped in favor of lazy PSD cuts.
// Equality rows whose lifted image is linear over the Gram block are also
// multiplied by the scalar variables (an RLT pass) which transfers the
// problem's equality structure onto the product columns.
class Lifting {
 public:
  explicit Lifting(const QcqpProblem& p, bool rlt = true);

  int n_orig() const { return n_orig_; }
  int n_prod() const { return static_cast<int>(prods_.size()); }
  const std::vector<std::pair<VarId, VarId>>& products() const { return prods_; }

  // LP over [orig vars | products] with the given boxes and cut pool.
  LpProblem assemble(const std::vector<double>& lo, const std::vector<double>& hi,
                     const CutPool& cuts) const;

  // the lifted objective as a row (for objective-cut OBBT)
  LpRow objective_cut_row(double at_least) const;
  double objective_constant() const { return obj_c0_; }

  // |w - u*v| at an LP solution
  double product_violation(const std::vector<double>& x, int k) const;

 private:
  int product(VarId a, VarId b);
  void lift_into(const QuadExpr& e, std::vector<std::pair<int, double>>& terms, double& c0);

  const QcqpProblem* p_;
  int n_orig_ = 0;
  double obj_c0_ = 0.0;
  std::vector<std::pair<VarId, VarId>> prods_;
  std::map<std::pair<VarId, VarId>, int> prod_index_;
  std::vector<LpRow> base_rows_;
  std::vector<double> base_obj_;
};

// Interval of u*v over boxes.
std::pair<double, double> product_interval(double lu, double uu, double lv, double uv, bool square);

}  // namespace ncgwc

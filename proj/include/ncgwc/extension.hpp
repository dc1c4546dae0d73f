#pragma once

#include "ncgwc/oracle.hpp"
#include "ncgwc/types.hpp"

namespace ncgwc {

struct ExtensionOptions {
  double fw_gap_tol = 1e-10;  // duality-gap stop for the simplex maximization
  long fw_max_iters = 100000;
  bool active_set_polish = true;  // refine the Frank-Wolfe support by a KKT solve
};

// The max-over-simplex extension of an interpolable triplet set: a function
// in F_{mu,L} matching every (x_i, g_i, f_i). Evaluation solves a concave
// quadratic over the simplex with an away-step conditional-gradient loop;
// the gradient comes from envelope differentiation at the maximizer.
class ExtensionFunction : public Oracle {
 public:
  ExtensionFunction(TripletSet set, ClassParams params, ExtensionOptions opts = {});

  double value(const Vec& y) const override;
  Vec gradient(const Vec& y) const override;
  double initial_step_hint() const override { return 1.0 / params_.L; }

  std::pair<double, SimplexWeights> value_and_weights(const Vec& y) const;

  // Max pairwise gradient spread across maximizers found from several
  // vertex starts; large values flag a nonunique maximizer.
  double gradient_spread(const Vec& y, int starts = 4) const;

  const TripletSet& triplets() const { return set_; }
  const ClassParams& params() const { return params_; }

 private:
  SimplexWeights maximize(const Vec& y, int start_vertex) const;

  TripletSet set_;
  ClassParams params_;
  ExtensionOptions opts_;
  Mat v_;      // columns g_i - mu x_i
  Mat q_;      // V'V / (L - mu)
  Vec kappa_;  // per-triplet affine offsets
};

}  // namespace ncgwc

#pragma once

#include "ncgwc/qcqp.hpp"

namespace ncgwc {

struct AlOptions {
  int max_outer = 50;
  long max_inner = 600;
  double target_feas = 1e-9;
  double rho0 = 10.0;
  double rho_max = 1e10;
  double obj_weight = 1.0;  // 0 = pure feasibility restoration
};

struct AlResult {
  Point z;
  double obj = -1e300;
  double viol = 1e300;
  bool feasible = false;  // viol <= 1e-8
};

// Local improvement of a (near-)feasible point by an augmented-Lagrangian
// loop over all scalar variables, Gram factor included. Monotone contract:
// if the result is worse or less feasible than the input, the input wins.
AlResult improve_local(const QcqpProblem& p, const Point& start, const AlOptions& opts = {});

}  // namespace ncgwc

#pragma once

#include "ncgwc/oracle.hpp"

namespace ncgwc {

struct LineSearchOptions {
  double rel_tol = 1e-8;    // stationarity: |<grad, d>| <= rel_tol*||d||*||grad|| + abs_tol
  double abs_tol = 1e-12;
  int max_bracket_doublings = 200;
  int max_bisections = 200;
  bool use_closed_form = true;
};

struct LineSearchResult {
  double gamma = 0.0;
  Vec x_next;
  int oracle_calls = 0;
};

// Exact line search for the update x_next = x - gamma*d (gamma >= 0).
// Requires <grad f(x), d> > 0. Brackets by doubling from the oracle's step
// hint, then bisects the directional derivative.
LineSearchResult exact_line_search(const Oracle& oracle, const Vec& x, const Vec& d,
                                   const LineSearchOptions& opts = {});

}  // namespace ncgwc

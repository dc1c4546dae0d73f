#include "ncgwc/line_search.hpp"

#include <cmath>

namespace ncgwc {

namespace {

bool stationary(const Vec& grad, const Vec& d, const LineSearchOptions& opts) {
  return std::abs(grad.dot(d)) <= opts.rel_tol * d.norm() * grad.norm() + opts.abs_tol;
}

}  // namespace

LineSearchResult exact_line_search(const Oracle& oracle, const Vec& x, const Vec& d,
                                   const LineSearchOptions& opts) {
  LineSearchResult res;
  const Vec g0 = oracle.gradient(x);
  res.oracle_calls = 1;
  const double slope0 = g0.dot(d);
  if (!(slope0 > 0.0)) {
    throw std::invalid_argument("exact_line_search: <grad f(x), d> must be positive");
  }

  if (opts.use_closed_form) {
    if (auto gamma = oracle.closed_form_step(x, d)) {
      res.gamma = *gamma;
      res.x_next = x - res.gamma * d;
      return res;
    }
  }

  // phi(t) = f(x - t d); phi'(t) = -<grad f(x - t d), d>. phi'(0) < 0.
  auto dphi = [&](double t) {
    ++res.oracle_calls;
    return -oracle.gradient(x - t * d).dot(d);
  };

  double lo = 0.0;
  double hi = std::max(oracle.initial_step_hint(), 1e-300);
  double dhi = dphi(hi);
  int doublings = 0;
  while (dhi < 0.0) {
    if (++doublings > opts.max_bracket_doublings) {
      throw std::runtime_error("exact_line_search: bracket expansion exceeded bound");
    }
    lo = hi;
    hi *= 2.0;
    dhi = dphi(hi);
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < opts.max_bisections; ++it) {
    mid = 0.5 * (lo + hi);
    const Vec gm = oracle.gradient(x - mid * d);
    ++res.oracle_calls;
    if (stationary(gm, d, opts)) break;
    if (gm.dot(d) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-16 * std::max(1.0, hi)) break;
  }
  res.gamma = mid;
  res.x_next = x - mid * d;
  return res;
}

}  // namespace ncgwc

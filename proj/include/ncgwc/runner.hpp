#pragma once

#include "ncgwc/line_search.hpp"
#include "ncgwc/oracle.hpp"

#include <iosfwd>
#include <optional>

namespace ncgwc {

enum class UpdateRule { PRP, FR, GDEL, FixedBetas };

// beta_k = (||g_next||^2 - eta <g_next, g_prev>) / ||g_prev||^2.
double beta_update(const Vec& g_next, const Vec& g_prev, double eta);

struct MethodConfig {
  UpdateRule rule = UpdateRule::PRP;
  int max_iters = 10;
  std::optional<Vec> d0;                  // default: the gradient at x0
  std::vector<double> fixed_betas;        // used by FixedBetas
  std::vector<double> fixed_gammas;       // when nonempty, bypass the line search (replay)
  LineSearchOptions line_search;

  double eta() const {
    switch (rule) {
      case UpdateRule::PRP:
        return 1.0;
      case UpdateRule::FR:
        return 0.0;
      default:
        throw std::logic_error("eta is only defined for PRP/FR");
    }
  }
};

// Full history of a run: per-iterate x/g/f plus per-step d/gamma/beta.
struct RunTrace {
  std::vector<Vec> x, g, d;
  std::vector<double> f;
  std::vector<double> gamma, beta;  // sized steps() each; beta[k] built d[k+1]
  std::string termination;

  int iterates() const { return static_cast<int>(x.size()); }
  int steps() const { return static_cast<int>(gamma.size()); }

  // (c_k, sin theta_k) with c_k = ||d_k||^2/||g_k||^2.
  std::pair<double, double> direction_quality(int k) const;

  void to_csv(std::ostream& os) const;
};

// Run scheme d_{k+1} = g_{k+1} + beta_k d_k with exact line search, starting
// from x0, until the gradient-norm stop rule or max_iters steps.
RunTrace run_method(const Oracle& oracle, const Vec& x0, const MethodConfig& cfg,
                    double grad_tol = 1e-10);

std::pair<double, double> direction_quality(const RunTrace& t, int k);

}  // namespace ncgwc

#pragma once

#include <stdexcept>

namespace ncgwc {

// Closed-form worst-case rate and direction-quality formulas, used as
// oracles against PEP solutions and against recorded run traces.

struct BoundQuery {
  double q = 0.0;        // inverse condition number, in (0,1)
  double epsilon = 0.0;  // relative direction error, in [0,1)
  double c = 1.0;        // direction-quality ratio ||d||^2/||g||^2, >= 1
  int k = 0;             // iteration index
};

// Rate of steepest descent with a relative direction error epsilon:
// ((1-q_eps)/(1+q_eps))^2 with q_eps = q(1-eps)/(1+eps).
double asd_rate(double q, double epsilon);

// Exact line-search gradient descent rate ((1-q)/(1+q))^2.
double gdel_rate(double q);

struct DirectionBound {
  double c;    // bound on ||d_k||^2/||g_k||^2
  double eps;  // matching sine bound sqrt(1 - 1/c)
};

// Worst-case direction quality for PRP: (1+q)^2/(4q), with eps = (1-q)/(1+q).
DirectionBound prp_direction_bound(double q);

// Per-step worst-case ratio for PRP: ((1-q^2)/(1+q^2))^2.
double prp_rate(double q);

// Polyak's classical per-step bound for PRP: 1 - q/(1 + 1/q^2).
double polyak_rate(double q);

// Bound on the FR update parameter given the previous direction quality:
// (1/c)(1 - q + 2 sqrt((c-1) q))^2 / (4q). Requires c_prev > 1.
double fr_beta_bound(double q, double c_prev);

// One step of the FR direction-quality recursion
// c_k = 1 + (1 - q + 2 sqrt((c_prev - 1) q))^2 / (4q); handles c_prev = 1.
DirectionBound fr_direction_recursion(double q, double c_prev);

// Which epsilon_k enters the FR per-step rate: the proof derives
// c_k <= 1 + k^2 (1-q)^2/(4q) while the theorem statement carries (k-1)^2.
enum class FrRateVariant { ProofK, StatementKMinusOne };

// Rate after one more FR step, k+1 total, as a function of k.
double fr_rate(double q, int k, FrRateVariant variant = FrRateVariant::ProofK);

// Rate of the lower complexity bound for the class: (1 - sqrt(q))^2.
double lower_complexity_rate(double q);

}  // namespace ncgwc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ncgwc {

// Numeric verification of the weighted-sum reformulations behind the
// closed-form direction lemmas, by random substitution: a polynomial
// identity that vanishes at many random points vanishes identically with
// overwhelming probability. Residuals are normalized by the total term
// magnitude so they sit at machine-epsilon scale regardless of sample size.

struct IdentitySamplerConfig {
  int trials = 1000;
  int dim = 2;
  uint64_t seed = 0;
  double vector_scale = 1.0;  // multiplies all sampled vectors
};

// Weighted sum of the four PRP proof inequalities vs the completed-square
// form of ||d_k||^2 - (1+q)^2/(4q) ||g_k||^2. Returns max relative residual.
double verify_prp_identity(const IdentitySamplerConfig& cfg);

// Weighted sum of the six FR beta-bound proof inequalities vs its
// completed-square form.
double verify_fr_beta_identity(const IdentitySamplerConfig& cfg);

// The three-term FR direction identity vs ||d_k||^2 - (1 + c beta)||g_k||^2.
double verify_fr_direction_identity(const IdentitySamplerConfig& cfg);

struct SignConditionReport {
  bool prp_lambda2_nonneg = false;      // inequality multiplier in the PRP proof
  bool fr_lambda56_nonneg = false;      // L - mu multipliers in the beta-bound proof
  bool fr_lambda3_needs_beta_pos = false;  // sqrt(c-1)/sqrt(beta c) demands beta > 0
  std::vector<std::string> notes;
};

// Checks nonnegativity of the multipliers attached to inequality
// constraints over a sampling grid; a validity condition of the proofs.
SignConditionReport verify_sign_conditions(int grid_points, uint64_t seed = 0);

}  // namespace ncgwc

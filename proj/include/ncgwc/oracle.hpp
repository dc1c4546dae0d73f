#pragma once

#include "ncgwc/types.hpp"

#include <optional>

namespace ncgwc {

// First-order oracle: value and gradient, plus an optional closed-form
// exact line-search step for x -> x - gamma*d.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;

  // Closed-form argmin_gamma f(x - gamma d), when available.
  virtual std::optional<double> closed_form_step(const Vec& /*x*/, const Vec& /*d*/) const {
    return std::nullopt;
  }

  // Initial bracketing step for the numeric line search (typically 1/L).
  virtual double initial_step_hint() const { return 1.0; }
};

// f(x) = 1/2 x'Ax - b'x with A symmetric positive definite.
class QuadraticOracle : public Oracle {
 public:
  QuadraticOracle(Mat a, Vec b);

  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  std::optional<double> closed_form_step(const Vec& x, const Vec& d) const override;
  double initial_step_hint() const override;

  const Mat& matrix() const { return a_; }
  Vec minimizer() const;
  double min_value() const;

  // Diagonal spectrum with both extremes mu and L present (n >= 2), the
  // remaining eigenvalues drawn uniformly from [mu, L].
  static QuadraticOracle random(const ClassParams& p, int dim, uint64_t seed);

 private:
  Mat a_;
  Vec b_;
};

}  // namespace ncgwc

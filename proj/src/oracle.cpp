#include "ncgwc/oracle.hpp"

#include <Eigen/Dense>

#include <random>

namespace ncgwc {

QuadraticOracle::QuadraticOracle(Mat a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != a_.cols() || a_.rows() != b_.size()) {
    throw std::invalid_argument("QuadraticOracle: shape mismatch");
  }
}

double QuadraticOracle::value(const Vec& x) const { return 0.5 * x.dot(a_ * x) - b_.dot(x); }

Vec QuadraticOracle::gradient(const Vec& x) const { return a_ * x - b_; }

std::optional<double> QuadraticOracle::closed_form_step(const Vec& x, const Vec& d) const {
  const double den = d.dot(a_ * d);
  if (den <= 0.0) return std::nullopt;
  return gradient(x).dot(d) / den;
}

double QuadraticOracle::initial_step_hint() const {
  // 1 / lambda_max via a crude bound (row sums)
  const double bound = a_.cwiseAbs().rowwise().sum().maxCoeff();
  return bound > 0 ? 1.0 / bound : 1.0;
}

Vec QuadraticOracle::minimizer() const { return a_.ldlt().solve(b_); }

double QuadraticOracle::min_value() const { return value(minimizer()); }

QuadraticOracle QuadraticOracle::random(const ClassParams& p, int dim, uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("QuadraticOracle::random: dim >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(p.mu, p.L);
  Vec eig(dim);
  eig(0) = p.mu;
  if (dim > 1) eig(1) = p.L;
  for (int i = 2; i < dim; ++i) eig(i) = unif(rng);
  // random orthogonal basis via QR of a Gaussian matrix
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat z(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) z(i, j) = gauss(rng);
  const Mat qmat = Eigen::HouseholderQR<Mat>(z).householderQ();
  Mat a = qmat * eig.asDiagonal() * qmat.transpose();
  a = 0.5 * (a + a.transpose());
  return QuadraticOracle(std::move(a), Vec::Zero(dim));
}

}  // namespace ncgwc

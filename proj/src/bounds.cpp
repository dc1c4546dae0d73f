#include "ncgwc/bounds.hpp"

#include <cmath>

namespace ncgwc {

namespace {

void check_q(double q, bool allow_one) {
  if (!(q > 0.0) || (allow_one ? !(q <= 1.0) : !(q < 1.0))) {
    throw std::invalid_argument("q out of range");
  }
}

}  // namespace

double asd_rate(double q, double epsilon) {
  check_q(q, true);
  if (!(epsilon >= 0.0) || !(epsilon < 1.0)) {
    throw std::invalid_argument("asd_rate: epsilon must lie in [0,1)");
  }
  const double q_eps = q * (1.0 - epsilon) / (1.0 + epsilon);
  const double r = (1.0 - q_eps) / (1.0 + q_eps);
  return r * r;
}

double gdel_rate(double q) { return asd_rate(q, 0.0); }

DirectionBound prp_direction_bound(double q) {
  check_q(q, true);
  const double c = (1.0 + q) * (1.0 + q) / (4.0 * q);
  return {c, (1.0 - q) / (1.0 + q)};
}

double prp_rate(double q) {
  if (!(q >= 0.0) || !(q <= 1.0)) throw std::invalid_argument("q out of range");
  const double r = (1.0 - q * q) / (1.0 + q * q);
  return r * r;
}

double polyak_rate(double q) {
  if (!(q >= 0.0) || !(q <= 1.0)) throw std::invalid_argument("q out of range");
  // 1 - q/(1 + 1/q^2), written as 1 - q^3/(1+q^2) so q = 0 needs no special case.
  return 1.0 - q * q * q / (1.0 + q * q);
}

double fr_beta_bound(double q, double c_prev) {
  check_q(q, true);
  if (!(c_prev > 1.0)) {
    throw std::invalid_argument("fr_beta_bound: requires c_prev > 1");
  }
  const double t = 1.0 - q + 2.0 * std::sqrt((c_prev - 1.0) * q);
  return t * t / (4.0 * q * c_prev);
}

DirectionBound fr_direction_recursion(double q, double c_prev) {
  check_q(q, true);
  if (!(c_prev >= 1.0)) {
    throw std::invalid_argument("fr_direction_recursion: requires c_prev >= 1");
  }
  const double t = 1.0 - q + 2.0 * std::sqrt((c_prev - 1.0) * q);
  const double c = 1.0 + t * t / (4.0 * q);
  return {c, std::sqrt(1.0 - 1.0 / c)};
}

double fr_rate(double q, int k, FrRateVariant variant) {
  check_q(q, false);
  if (k < 0) throw std::invalid_argument("fr_rate: k must be >= 0");
  const double kk = (variant == FrRateVariant::ProofK) ? double(k) : double(k - 1);
  const double m = std::max(0.0, kk);
  const double s = (1.0 - q) * (1.0 - q) * m * m;
  const double eps = std::sqrt(s / (4.0 * q + s));
  return asd_rate(q, eps);
}

double lower_complexity_rate(double q) {
  if (!(q >= 0.0) || !(q <= 1.0)) throw std::invalid_argument("q out of range");
  const double r = 1.0 - std::sqrt(q);
  return r * r;
}

}  // namespace ncgwc

#include "ncgwc/identities.hpp"

#include "ncgwc/types.hpp"

#include <cmath>
#include <random>

namespace ncgwc {

namespace {

struct Sample {
  double mu, L, q, gamma, beta, c;
  Vec g_prev, g_cur, d_prev;  // g_{k-1}, g_k, d_{k-1}
  double f_prev, f_cur;
};

class Sampler {
 public:
  Sampler(const IdentitySamplerConfig& cfg, bool beta_positive) noexcept
      : rng_(cfg.seed), dim_(cfg.dim), scale_(cfg.vector_scale), beta_positive_(beta_positive) {}

  Sample draw() {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Sample s;
    s.L = 1.0;
    s.mu = (0.01 + 0.98 * u01(rng_)) * s.L;
    s.q = s.mu / s.L;
    s.gamma = log_uniform();
    s.beta = log_uniform();
    if (!beta_positive_ && u01(rng_) < 0.5) s.beta = -s.beta;
    s.c = 1.0 + log_uniform();
    s.g_prev = gaussian();
    s.g_cur = gaussian();
    s.d_prev = gaussian();
    std::normal_distribution<double> n01(0.0, 1.0);
    s.f_prev = n01(rng_) * scale_ * scale_;
    s.f_cur = n01(rng_) * scale_ * scale_;
    return s;
  }

 private:
  double log_uniform() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);  // two decades around 1
    return std::pow(10.0, u(rng_));
  }
  Vec gaussian() {
    std::normal_distribution<double> n01(0.0, 1.0);
    Vec v(dim_);
    for (int i = 0; i < dim_; ++i) v(i) = n01(rng_) * scale_;
    return v;
  }

  std::mt19937_64 rng_;
  int dim_;
  double scale_;
  bool beta_positive_;
};

// Accumulates signed terms and their magnitudes so the residual can be
// reported relative to the size of the expression.
struct Acc {
  double sum = 0.0, mag = 0.0;
  void add(double t) {
    sum += t;
    mag += std::abs(t);
  }
};

double rel_residual(const Acc& lhs, const Acc& rhs) {
  const double scale = std::max(1e-300, std::max(lhs.mag, rhs.mag));
  return std::abs(lhs.sum - rhs.sum) / scale;
}

// The two smoothness/strong-convexity inequalities between x_{k-1} and x_k
// share the same quadratic block once x_{k-1}-x_k = gamma d_{k-1} is
// substituted; this returns that block.
double interp_quad_block(const Sample& s) {
  const Vec diff = s.gamma * s.d_prev - (s.g_prev - s.g_cur) / s.L;
  return (s.g_prev - s.g_cur).squaredNorm() / (2.0 * s.L) +
         s.mu / (2.0 * (1.0 - s.q)) * diff.squaredNorm();
}

}  // namespace

double verify_prp_identity(const IdentitySamplerConfig& cfg) {
  Sampler sampler(cfg, /*beta_positive=*/false);
  double worst = 0.0;
  for (int t = 0; t < cfg.trials; ++t) {
    const Sample s = sampler.draw();
    const double lam1 = -s.beta * s.beta * (1.0 + s.q) / (s.L * s.gamma * s.q);
    const double lam2 =
        s.beta * s.beta * (1.0 + s.q) * (1.0 + s.q) / (s.L * s.gamma * s.gamma * (1.0 - s.q) * s.q);
    const double lam3 = lam2;
    const double lam4 = s.beta * (1.0 + s.q) / (s.L * s.gamma * s.q);

    const double quad = interp_quad_block(s);
    Acc lhs;
    lhs.add(lam1 * s.g_cur.dot(s.d_prev));
    lhs.add(lam2 * (s.f_cur - s.f_prev + s.gamma * s.g_cur.dot(s.d_prev) + quad));
    lhs.add(lam3 * (s.f_prev - s.f_cur - s.gamma * s.g_prev.dot(s.d_prev) + quad));
    lhs.add(lam4 * (s.g_prev.dot(s.g_cur) - s.g_cur.squaredNorm() +
                    s.beta * s.g_prev.dot(s.d_prev)));

    const Vec d_next = s.g_cur + s.beta * s.d_prev;
    const Vec sq = s.d_prev - (1.0 + s.q) / (2.0 * s.L * s.gamma * s.q) * s.g_prev +
                   (2.0 * s.beta * (1.0 + s.q) - s.L * s.gamma * (1.0 - s.q) * (1.0 - s.q)) /
                       (4.0 * s.beta * s.L * s.gamma * s.q) * s.g_cur;
    Acc rhs;
    rhs.add(d_next.squaredNorm());
    rhs.add(-(1.0 + s.q) * (1.0 + s.q) / (4.0 * s.q) * s.g_cur.squaredNorm());
    rhs.add(4.0 * s.beta * s.beta * s.q / ((1.0 - s.q) * (1.0 - s.q)) * sq.squaredNorm());

    worst = std::max(worst, rel_residual(lhs, rhs));
  }
  return worst;
}

double verify_fr_beta_identity(const IdentitySamplerConfig& cfg) {
  Sampler sampler(cfg, /*beta_positive=*/true);
  double worst = 0.0;
  for (int t = 0; t < cfg.trials; ++t) {
    const Sample s = sampler.draw();
    const double root_cc1 = std::sqrt((s.c - 1.0) * s.c);
    const double lam1 = s.gamma * (s.L + s.mu) - 2.0 * std::sqrt(s.beta) / root_cc1;
    const double lam2 = 2.0 / s.c - s.gamma * (s.L + s.mu);
    const double lam3 = std::sqrt(s.c - 1.0) / std::sqrt(s.beta * s.c);
    const double lam4 = -s.gamma * s.gamma * s.L * s.mu + std::sqrt(s.beta) / (s.c * root_cc1);
    const double lam5 = s.L - s.mu;
    const double lam6 = lam5;

    const double quad = interp_quad_block(s);
    Acc lhs;
    lhs.add(lam1 * (s.g_prev.dot(s.d_prev) - s.g_prev.squaredNorm()));
    lhs.add(lam2 * s.g_cur.dot(s.d_prev));
    lhs.add(lam3 * (s.g_cur.squaredNorm() - s.beta * s.g_prev.squaredNorm()));
    lhs.add(lam4 * (s.d_prev.squaredNorm() - s.c * s.g_prev.squaredNorm()));
    lhs.add(lam5 * (s.f_cur - s.f_prev + s.gamma * s.g_cur.dot(s.d_prev) + quad));
    lhs.add(lam6 * (s.f_prev - s.f_cur - s.gamma * s.g_prev.dot(s.d_prev) + quad));

    const double nu = 2.0 * std::sqrt(1.0 - 1.0 / s.c) * std::sqrt(s.beta) -
                      s.c * s.gamma * s.gamma * s.L * s.mu + s.gamma * (s.L + s.mu) - 1.0;
    const Vec sq = std::pow(s.beta / ((s.c - 1.0) * s.c * s.c * s.c), 0.25) * s.d_prev -
                   std::pow(s.beta * s.c / (s.c - 1.0), 0.25) * s.g_prev +
                   std::pow((s.c - 1.0) / (s.beta * s.c), 0.25) * s.g_cur;
    Acc rhs;
    rhs.add(s.g_cur.squaredNorm());
    rhs.add(-nu * s.g_prev.squaredNorm());
    rhs.add(sq.squaredNorm());

    worst = std::max(worst, rel_residual(lhs, rhs));
  }
  return worst;
}

double verify_fr_direction_identity(const IdentitySamplerConfig& cfg) {
  Sampler sampler(cfg, /*beta_positive=*/true);
  double worst = 0.0;
  for (int t = 0; t < cfg.trials; ++t) {
    const Sample s = sampler.draw();
    Acc lhs;
    lhs.add(2.0 * s.beta * s.d_prev.dot(s.g_cur));
    lhs.add(s.beta * s.beta * (s.d_prev.squaredNorm() - s.c * s.g_prev.squaredNorm()));
    lhs.add(-s.c * s.beta * (s.g_cur.squaredNorm() - s.beta * s.g_prev.squaredNorm()));

    const Vec d_next = s.g_cur + s.beta * s.d_prev;
    Acc rhs;
    rhs.add(d_next.squaredNorm());
    rhs.add(-(1.0 + s.c * s.beta) * s.g_cur.squaredNorm());

    worst = std::max(worst, rel_residual(lhs, rhs));
  }
  return worst;
}

SignConditionReport verify_sign_conditions(int grid_points, uint64_t seed) {
  SignConditionReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  rep.prp_lambda2_nonneg = true;
  rep.fr_lambda56_nonneg = true;
  for (int i = 0; i < grid_points; ++i) {
    const double L = 1.0;
    const double mu = (0.01 + 0.98 * u01(rng)) * L;
    const double q = mu / L;
    const double gamma = std::pow(10.0, -1.0 + 2.0 * u01(rng));
    double beta = std::pow(10.0, -1.0 + 2.0 * u01(rng));
    if (u01(rng) < 0.5) beta = -beta;
    const double lam2 = beta * beta * (1.0 + q) * (1.0 + q) / (L * gamma * gamma * (1.0 - q) * q);
    if (beta != 0.0 && !(lam2 > 0.0)) rep.prp_lambda2_nonneg = false;
    if (!(L - mu > 0.0)) rep.fr_lambda56_nonneg = false;
  }
  // sqrt(c-1)/sqrt(beta c) is real only for beta > 0: the beta-bound proof
  // applies to FR, whose beta is a ratio of squared gradient norms.
  rep.fr_lambda3_needs_beta_pos = true;
  rep.notes.push_back("lambda2 = beta^2(1+q)^2/(gamma^2 L (1-q) q) > 0 whenever beta != 0");
  rep.notes.push_back("lambda5 = lambda6 = L - mu > 0 on the whole domain");
  rep.notes.push_back("lambda3 = sqrt(c-1)/sqrt(beta c) requires beta > 0; beta sampling "
                      "for the FR identities is restricted accordingly");
  return rep;
}

}  // namespace ncgwc

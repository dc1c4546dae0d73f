#include "ncgwc/runner.hpp"

#include <cmath>
#include <ostream>

namespace ncgwc {

double beta_update(const Vec& g_next, const Vec& g_prev, double eta) {
  const double denom = g_prev.squaredNorm();
  if (!(denom > 0.0)) {
    throw std::invalid_argument("beta_update: previous gradient is zero (converged)");
  }
  return (g_next.squaredNorm() - eta * g_next.dot(g_prev)) / denom;
}

std::pair<double, double> RunTrace::direction_quality(int k) const {
  if (k < 0 || k >= static_cast<int>(d.size())) throw std::out_of_range("direction_quality: k");
  const double gn = g[k].squaredNorm();
  if (!(gn > 0.0)) throw std::invalid_argument("direction_quality: zero gradient");
  const double c = d[k].squaredNorm() / gn;
  return {c, std::sqrt(std::max(0.0, 1.0 - 1.0 / c))};
}

std::pair<double, double> direction_quality(const RunTrace& t, int k) {
  return t.direction_quality(k);
}

void RunTrace::to_csv(std::ostream& os) const {
  os << "k,f,grad_norm,gamma,beta,c,sin_theta\n";
  for (int k = 0; k < iterates(); ++k) {
    os << k << "," << f[k] << "," << g[k].norm();
    if (k < steps()) {
      os << "," << gamma[k];
      os << "," << (k < static_cast<int>(beta.size()) ? beta[k] : 0.0);
    } else {
      os << ",,";
    }
    if (k < static_cast<int>(d.size()) && g[k].squaredNorm() > 0) {
      const auto [c, st] = direction_quality(k);
      os << "," << c << "," << st;
    } else {
      os << ",,";
    }
    os << "\n";
  }
}

RunTrace run_method(const Oracle& oracle, const Vec& x0, const MethodConfig& cfg,
                    double grad_tol) {
  if (!x0.allFinite()) throw std::invalid_argument("run_method: x0 not finite");
  if (cfg.rule == UpdateRule::FixedBetas &&
      static_cast<int>(cfg.fixed_betas.size()) < cfg.max_iters - 1) {
    throw std::invalid_argument("run_method: fixed beta list shorter than max_iters-1");
  }

  RunTrace t;
  Vec x = x0;
  Vec g = oracle.gradient(x);
  t.x.push_back(x);
  t.g.push_back(g);
  t.f.push_back(oracle.value(x));
  const double g0_norm = g.norm();
  const double stop = grad_tol * std::max(1.0, g0_norm);

  Vec d = cfg.d0 ? *cfg.d0 : g;
  if (cfg.d0 && cfg.d0->size() != x0.size()) {
    throw std::invalid_argument("run_method: d0 dimension mismatch");
  }

  for (int k = 0; k < cfg.max_iters; ++k) {
    if (g.norm() <= stop) {
      t.termination = "gradient-stop";
      return t;
    }
    t.d.push_back(d);

    double gamma;
    Vec x_next;
    if (k < static_cast<int>(cfg.fixed_gammas.size())) {
      gamma = cfg.fixed_gammas[k];
      x_next = x - gamma * d;
    } else {
      auto ls = exact_line_search(oracle, x, d, cfg.line_search);
      gamma = ls.gamma;
      x_next = std::move(ls.x_next);
    }
    const Vec g_next = oracle.gradient(x_next);

    t.gamma.push_back(gamma);
    t.x.push_back(x_next);
    t.g.push_back(g_next);
    t.f.push_back(oracle.value(x_next));

    if (k + 1 >= cfg.max_iters) break;
    if (g_next.norm() <= stop) {
      t.termination = "gradient-stop";
      return t;
    }

    double beta;
    switch (cfg.rule) {
      case UpdateRule::GDEL:
        beta = 0.0;
        break;
      case UpdateRule::FixedBetas:
        beta = cfg.fixed_betas[k];
        break;
      default:
        beta = beta_update(g_next, g, cfg.eta());
    }
    t.beta.push_back(beta);
    d = g_next + beta * d;
    x = std::move(x_next);
    g = g_next;
  }
  t.termination = "max-iters";
  return t;
}

}  // namespace ncgwc

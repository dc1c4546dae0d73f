#include "ncgwc/local_nlp.hpp"

#include <cmath>

namespace ncgwc {

namespace {

struct AlState {
  const QcqpProblem& p;
  const CompiledProblem compiled;
  AlOptions opts;
  std::vector<double> lam;  // equality multipliers
  std::vector<double> mu;   // inequality multipliers (for expr <= 0 form)
  std::vector<int> sign;    // +1: expr <= 0, -1: expr >= 0, 0: equality
  double rho;

  explicit AlState(const QcqpProblem& prob, const AlOptions& o)
      : p(prob), compiled(prob, /*include_psd_factor=*/true), opts(o), rho(o.rho0) {
    const int m = compiled.num_cons();
    lam.assign(m, 0.0);
    mu.assign(m, 0.0);
    sign.resize(m);
    for (int i = 0; i < m; ++i) {
      sign[i] = compiled.sense(i) == Sense::EQ ? 0 : (compiled.sense(i) == Sense::LE ? 1 : -1);
    }
  }

  // minimized merit: -w*obj + AL terms
  double merit(const Point& z, std::vector<double>* grad) const {
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);
    double phi = -opts.obj_weight * compiled.eval_objective(z);
    if (grad) compiled.objective_gradient(z, -opts.obj_weight, *grad);
    for (int i = 0; i < compiled.num_cons(); ++i) {
      double c = compiled.eval_con(i, z);
      if (sign[i] == 0) {
        phi += lam[i] * c + 0.5 * rho * c * c;
        if (grad) compiled.con_gradient(i, z, lam[i] + rho * c, *grad);
      } else {
        if (sign[i] < 0) c = -c;  // normalize to c <= 0
        const double t = mu[i] + rho * c;
        if (t > 0.0) {
          phi += (t * t - mu[i] * mu[i]) / (2.0 * rho);
          if (grad) compiled.con_gradient(i, z, sign[i] < 0 ? -t : t, *grad);
        } else {
          phi -= mu[i] * mu[i] / (2.0 * rho);
        }
      }
    }
    return phi;
  }

  void update_multipliers(const Point& z) {
    for (int i = 0; i < compiled.num_cons(); ++i) {
      double c = compiled.eval_con(i, z);
      if (sign[i] == 0) {
        lam[i] += rho * c;
      } else {
        if (sign[i] < 0) c = -c;
        mu[i] = std::max(0.0, mu[i] + rho * c);
      }
    }
  }

  double violation(const Point& z) const {
    double worst = 0.0;
    for (int i = 0; i < compiled.num_cons(); ++i) {
      double c = compiled.eval_con(i, z);
      if (sign[i] == 0) {
        worst = std::max(worst, std::abs(c));
      } else {
        if (sign[i] < 0) c = -c;
        worst = std::max(worst, c);
      }
    }
    return worst;
  }
};

// Projected Barzilai-Borwein descent with a nonmonotone backtracking guard.
void inner_minimize(const AlState& st, Point& z, long max_iters, double gtol) {
  const int n = static_cast<int>(z.size());
  std::vector<double> grad(n), grad_prev(n), z_prev(n), trial(n), gtrial(n);

  auto project = [&](Point& v) {
    for (int i = 0; i < n; ++i) v[i] = std::clamp(v[i], st.p.vars[i].lo, st.p.vars[i].hi);
  };
  project(z);
  double phi = st.merit(z, &grad);
  double step = 1e-3;
  std::vector<double> history(8, phi);
  int hidx = 0;

  for (long it = 0; it < max_iters; ++it) {
    // projected gradient norm for the stop rule
    double pg = 0.0;
    for (int i = 0; i < n; ++i) {
      const double t = std::clamp(z[i] - grad[i], st.p.vars[i].lo, st.p.vars[i].hi) - z[i];
      pg = std::max(pg, std::abs(t));
    }
    if (pg <= gtol) break;

    const double ref = *std::max_element(history.begin(), history.end());
    double t = step;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      for (int i = 0; i < n; ++i) trial[i] = z[i] - t * grad[i];
      project(trial);
      double descent = 0.0;
      for (int i = 0; i < n; ++i) descent += grad[i] * (trial[i] - z[i]);
      const double phit = st.merit(trial, nullptr);
      if (phit <= ref + 1e-4 * descent || phit < phi - 1e-16 * (1.0 + std::abs(phi))) {
        z_prev = z;
        grad_prev = grad;
        z = trial;
        phi = st.merit(z, &grad);
        accepted = true;
        break;
      }
      t *= 0.25;
    }
    if (!accepted) break;
    history[hidx] = phi;
    hidx = (hidx + 1) % static_cast<int>(history.size());

    // BB step from the last displacement
    double ss = 0.0, sy = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = z[i] - z_prev[i];
      const double y = grad[i] - grad_prev[i];
      ss += s * s;
      sy += s * y;
    }
    step = (sy > 1e-16) ? std::clamp(ss / sy, 1e-10, 1e6) : std::min(1.0, t * 4.0);
  }
}

}  // namespace

AlResult improve_local(const QcqpProblem& p, const Point& start, const AlOptions& opts) {
  AlState st(p, opts);
  Point z = start;
  z.resize(p.num_vars(), 0.0);
  for (int i = 0; i < p.num_vars(); ++i) z[i] = std::clamp(z[i], p.vars[i].lo, p.vars[i].hi);

  const CompiledProblem& cp = st.compiled;
  const double start_obj = cp.eval_objective(z);
  const double start_viol = st.violation(z);

  AlResult best;
  best.z = z;
  best.obj = start_obj;
  best.viol = start_viol;
  best.feasible = start_viol <= 1e-8;

  double gtol = 1e-5;
  double prev_viol = 1e300;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    inner_minimize(st, z, opts.max_inner, gtol);
    const double viol = st.violation(z);
    const double obj = cp.eval_objective(z);
    // track the best feasible-enough point seen
    if (viol <= 1e-8 && (!best.feasible || obj > best.obj)) {
      best.z = z;
      best.obj = obj;
      best.viol = viol;
      best.feasible = true;
    } else if (!best.feasible && viol < best.viol) {
      best.z = z;
      best.obj = obj;
      best.viol = viol;
    }
    if (viol <= opts.target_feas && gtol <= 1e-9) break;
    st.update_multipliers(z);
    if (viol > 0.25 * prev_viol && st.rho < opts.rho_max) st.rho *= 6.0;
    prev_viol = viol;
    gtol = std::max(1e-10, gtol * 0.2);
  }

  // monotone contract against the input
  if (best.feasible && start_viol <= 1e-8 && best.obj < start_obj) {
    best.z = start;
    best.z.resize(p.num_vars(), 0.0);
    best.obj = start_obj;
    best.viol = start_viol;
  }
  return best;
}

}  // namespace ncgwc

#include "ncgwc/extension.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace ncgwc {

ExtensionFunction::ExtensionFunction(TripletSet set, ClassParams params, ExtensionOptions opts)
    : set_(std::move(set)), params_(params), opts_(opts) {
  const int m = set_.size();
  const int n = set_.dimension();
  if (m == 0) throw std::invalid_argument("ExtensionFunction: empty triplet set");
  v_.resize(n, m);
  kappa_.resize(m);
  const double gap = params_.L - params_.mu;
  for (int i = 0; i < m; ++i) {
    const Triplet& t = set_.items[i];
    v_.col(i) = t.g - params_.mu * t.x;
    const Vec r = t.g - params_.L * t.x;
    kappa_(i) = t.f + r.squaredNorm() / (2.0 * gap) - 0.5 * params_.L * t.x.squaredNorm();
  }
  q_ = v_.transpose() * v_ / gap;
}

// Maximize lin'a - 1/2 a'Qa over the simplex. Away-step Frank-Wolfe with
// exact steps, then an optional KKT refinement on the discovered support.
SimplexWeights ExtensionFunction::maximize(const Vec& y, int start_vertex) const {
  const int m = set_.size();
  const Vec lin = v_.transpose() * y + kappa_;
  Vec a = Vec::Zero(m);
  a(start_vertex % m) = 1.0;
  if (m == 1) return {a};

  long it = 0;
  for (; it < opts_.fw_max_iters; ++it) {
    const Vec grad = lin - q_ * a;
    int fw = 0;
    grad.maxCoeff(&fw);
    const double avg = grad.dot(a);
    const double fw_gap = grad(fw) - avg;
    if (fw_gap < opts_.fw_gap_tol) break;

    // steepest away vertex among the support
    int aw = -1;
    double aw_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (a(i) > 1e-15 && grad(i) < aw_val) {
        aw_val = grad(i);
        aw = i;
      }
    }
    Vec dir;
    double smax;
    if (aw >= 0 && (avg - aw_val) > fw_gap && a(aw) < 1.0 - 1e-13) {
      dir = a;
      dir(aw) -= 1.0;  // away direction a - e_aw
      smax = a(aw) / (1.0 - a(aw));
    } else {
      dir = -a;
      dir(fw) += 1.0;  // FW direction e_fw - a
      smax = 1.0;
    }
    const double num = grad.dot(dir);
    const double den = dir.dot(q_ * dir);
    double s = (den <= 0.0) ? smax : std::min(smax, num / den);
    if (s <= 0.0) break;
    a += s * dir;
    a = a.cwiseMax(0.0);
    a /= a.sum();
  }
  if (it >= opts_.fw_max_iters) {
    throw std::runtime_error("ExtensionFunction: simplex maximization iteration budget exhausted");
  }

  if (opts_.active_set_polish) {
    // Refine on the active support: solve the equality-constrained QP
    //   max lin'a - 1/2 a'Qa  s.t. sum a = 1, a = 0 off support,
    // dropping negative components until the solution is primal feasible.
    std::vector<int> support;
    for (int i = 0; i < m; ++i)
      if (a(i) > 1e-10) support.push_back(i);
    for (int round = 0; round < 2 * m + 2 && !support.empty(); ++round) {
      const int s = static_cast<int>(support.size());
      Mat kkt = Mat::Zero(s + 1, s + 1);
      Vec rhs(s + 1);
      for (int i = 0; i < s; ++i) {
        for (int j = 0; j < s; ++j) kkt(i, j) = q_(support[i], support[j]);
        kkt(i, s) = 1.0;
        kkt(s, i) = 1.0;
        rhs(i) = lin(support[i]);
      }
      rhs(s) = 1.0;
      Vec sol = kkt.fullPivLu().solve(rhs);
      int worst = -1;
      double worst_val = -1e-12;
      for (int i = 0; i < s; ++i) {
        if (sol(i) < worst_val) {
          worst_val = sol(i);
          worst = i;
        }
      }
      if (worst < 0) {
        Vec refined = Vec::Zero(m);
        for (int i = 0; i < s; ++i) refined(support[i]) = std::max(0.0, sol(i));
        const double sum = refined.sum();
        if (sum > 0.5) {
          refined /= sum;
          // keep the refinement only if it does not decrease the objective
          const auto val = [&](const Vec& w) { return lin.dot(w) - 0.5 * w.dot(q_ * w); };
          if (val(refined) >= val(a) - 1e-14) a = refined;
        }
        break;
      }
      support.erase(support.begin() + worst);
    }
  }
  return {a};
}

std::pair<double, SimplexWeights> ExtensionFunction::value_and_weights(const Vec& y) const {
  if (y.size() != set_.dimension()) {
    throw std::invalid_argument("ExtensionFunction: query dimension mismatch");
  }
  SimplexWeights w = maximize(y, 0);
  const Vec lin = v_.transpose() * y + kappa_;
  const double val =
      0.5 * params_.mu * y.squaredNorm() + lin.dot(w.alpha) - 0.5 * w.alpha.dot(q_ * w.alpha);
  return {val, std::move(w)};
}

double ExtensionFunction::value(const Vec& y) const { return value_and_weights(y).first; }

Vec ExtensionFunction::gradient(const Vec& y) const {
  const SimplexWeights w = value_and_weights(y).second;
  return params_.mu * y + v_ * w.alpha;
}

double ExtensionFunction::gradient_spread(const Vec& y, int starts) const {
  std::vector<Vec> grads;
  const int m = set_.size();
  for (int s = 0; s < std::min(starts, m); ++s) {
    const SimplexWeights w = maximize(y, s);
    grads.push_back(params_.mu * y + v_ * w.alpha);
  }
  double spread = 0.0;
  for (size_t i = 0; i < grads.size(); ++i)
    for (size_t j = i + 1; j < grads.size(); ++j)
      spread = std::max(spread, (grads[i] - grads[j]).norm());
  return spread;
}

}  // namespace ncgwc

#include "ncgwc/simplex_lp.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace ncgwc {

int LpProblem::add_col(double lo_, double hi_, double obj_) {
  lo.push_back(lo_);
  hi.push_back(hi_);
  obj.push_back(obj_);
  return n++;
}

namespace {

enum class State : unsigned char { AtLo, AtHi, Basic };

class Simplex {
 public:
  Simplex(const LpProblem& lp, const LpOptions& opts) : lp_(lp), opts_(opts) {
    m_ = static_cast<int>(lp.rows.size());
    n_total_ = lp.n + 2 * m_;
    a_ = Mat::Zero(m_, n_total_);
    lo_.assign(n_total_, 0.0);
    hi_.assign(n_total_, 0.0);
    for (int j = 0; j < lp.n; ++j) {
      lo_[j] = lp.lo[j];
      hi_[j] = lp.hi[j];
      if (!(lo_[j] <= hi_[j]) || !std::isfinite(lo_[j]) || !std::isfinite(hi_[j])) {
        throw std::invalid_argument("solve_lp: every variable needs a finite box");
      }
    }
    b_ = Vec::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      double scale = std::abs(lp.rows[i].rhs);
      for (const auto& [j, c] : lp.rows[i].terms) scale = std::max(scale, std::abs(c));
      if (scale < 1e-12) scale = 1.0;
      const double inv = 1.0 / scale;
      double act = std::abs(lp.rows[i].rhs) * inv + 1.0;
      for (const auto& [j, c] : lp.rows[i].terms) {
        if (c != 0.0) a_(i, j) += c * inv;
      }
      for (int j = 0; j < lp.n; ++j) {
        if (a_(i, j) != 0.0) act += std::abs(a_(i, j)) * std::max(std::abs(lo_[j]), std::abs(hi_[j]));
      }
      b_(i) = lp.rows[i].rhs * inv;
      const int s = lp.n + i;
      a_(i, s) = 1.0;
      switch (lp.rows[i].sense) {
        case Sense::LE:
          lo_[s] = 0.0;
          hi_[s] = act;
          break;
        case Sense::GE:
          lo_[s] = -act;
          hi_[s] = 0.0;
          break;
        default:
          lo_[s] = hi_[s] = 0.0;
      }
      art_bound_.push_back(act);
    }
  }

  // Valid upper bound on max cost'x over the standard-form feasible set,
  // from any dual vector y (Neumaier-Shcherbina): y'b + sum_j box-max of
  // (c_j - y'A_j) x_j. Never depends on the quality of the final basis.
  double safe_dual_bound(const Vec& cost) {
    Vec cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
    const Eigen::RowVectorXd y = cb.transpose() * binv_;
    const Vec red = cost - (y * a_).transpose();
    double bound = y.dot(b_);
    for (int j = 0; j < n_total_; ++j) {
      bound += std::max(red(j) * lo_[j], red(j) * hi_[j]);
    }
    return bound + 1e-9 * (1.0 + std::abs(bound));
  }

  Vec phase2_cost() const {
    Vec cost = Vec::Zero(n_total_);
    for (int j = 0; j < lp_.n; ++j) cost(j) = lp_.obj[j];
    return cost;
  }

  // feasible-basis warm start: only accepted when the snapshot basis stays
  // primal feasible under the current bounds
  bool try_warm(const LpWarmStart& warm) {
    const int nm = lp_.n + m_;
    if (!warm.valid || static_cast<int>(warm.basis.size()) != m_ ||
        static_cast<int>(warm.at_hi.size()) != nm) {
      return false;
    }
    for (int j : warm.basis) {
      if (j < 0 || j >= nm) return false;
    }
    state_.assign(n_total_, State::AtLo);
    xn_.assign(n_total_, 0.0);
    for (int j = 0; j < nm; ++j) {
      state_[j] = warm.at_hi[j] ? State::AtHi : State::AtLo;
      xn_[j] = warm.at_hi[j] ? hi_[j] : lo_[j];
    }
    for (int i = 0; i < m_; ++i) {
      const int aj = lp_.n + m_ + i;
      a_(i, aj) = 1.0;
      lo_[aj] = hi_[aj] = 0.0;
      art_bound_[i] = 0.0;
    }
    basis_ = warm.basis;
    for (int j : basis_) state_[j] = State::Basic;
    Mat basis_mat(m_, m_);
    for (int i = 0; i < m_; ++i) basis_mat.col(i) = a_.col(basis_[i]);
    const auto lu = basis_mat.partialPivLu();
    binv_ = lu.inverse();
    // sanity: the inverse must actually invert
    const Vec probe = basis_mat * (binv_ * b_) - b_;
    if (!probe.allFinite() || probe.cwiseAbs().maxCoeff() > 1e-6 * (1.0 + b_.cwiseAbs().maxCoeff()))
      return false;
    Vec r = b_;
    for (int j = 0; j < n_total_; ++j) {
      if (state_[j] != State::Basic && xn_[j] != 0.0) r -= a_.col(j) * xn_[j];
    }
    xb_ = binv_ * r;
    const double tol = 10.0 * opts_.feas_tol * (1.0 + b_.cwiseAbs().maxCoeff());
    for (int i = 0; i < m_; ++i) {
      const int bj = basis_[i];
      if (xb_(i) < lo_[bj] - tol || xb_(i) > hi_[bj] + tol) return false;
    }
    return true;
  }

  void export_warm(LpWarmStart& warm) const {
    warm.valid = false;
    for (int j : basis_) {
      if (j >= lp_.n + m_) return;  // artificial still basic
    }
    warm.basis = basis_;
    warm.at_hi.assign(lp_.n + m_, 0);
    for (int j = 0; j < lp_.n + m_; ++j) warm.at_hi[j] = state_[j] == State::AtHi ? 1 : 0;
    warm.valid = true;
  }

  LpSolution run(LpWarmStart* warm) {
    LpSolution sol;
    const int cap = opts_.max_iters > 0 ? opts_.max_iters : 400 + 60 * (m_ + lp_.n);
    const double feas = opts_.feas_tol * (1.0 + b_.cwiseAbs().maxCoeff());
    if (warm && try_warm(*warm)) {
      Vec cost = phase2_cost();
      if (!iterate(cost, cap)) {
        refactor();
        sol.status = LpStatus::IterLimit;
        sol.obj = safe_dual_bound(cost);
        sol.iterations = iters_;
        return sol;
      }
      refactor();
      sol.x.resize(lp_.n);
      for (int j = 0; j < lp_.n; ++j) sol.x[j] = value_of(j);
      sol.obj = safe_dual_bound(cost);
      sol.iterations = iters_;
      sol.status = primal_feasible() ? LpStatus::Optimal : LpStatus::Numerical;
      if (sol.status == LpStatus::Optimal) export_warm(*warm);
      return sol;
    }
    return run_cold(warm);
  }

  LpSolution run_cold(LpWarmStart* warm) {
    LpSolution sol;
    init_basis();

    // phase 1: drive the artificials to zero; a positive optimum is only
    // believed after it survives a fresh refactorization, and infeasibility
    // is only reported with a certified negative dual bound
    Vec cost = Vec::Zero(n_total_);
    for (int i = 0; i < m_; ++i) cost(lp_.n + m_ + i) = -1.0;
    const int cap = opts_.max_iters > 0 ? opts_.max_iters : 400 + 60 * (m_ + lp_.n);
    const double feas = opts_.feas_tol * (1.0 + b_.cwiseAbs().maxCoeff());
    double art_sum = 1e300;
    for (int round = 0; round < 5; ++round) {
      if (!iterate(cost, cap)) {
        refactor();
        sol.status = LpStatus::IterLimit;
        sol.obj = safe_dual_bound(phase2_cost());
        return sol;
      }
      const double prev = art_sum;
      art_sum = 0.0;
      for (int i = 0; i < m_; ++i) art_sum += std::abs(value_of(lp_.n + m_ + i));
      if (art_sum <= feas) break;
      if (art_sum >= prev * 0.999) {
#ifdef NCGWC_LP_DEBUG
        std::fprintf(stderr, "phase1 stuck: art_sum=%.6e feas=%.3e\n", art_sum, feas);
        refactor();
        Vec cb(m_);
        for (int i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
        const Eigen::RowVectorXd y = cb.transpose() * binv_;
        for (int i = 0; i < m_; ++i) {
          const double av = value_of(lp_.n + m_ + i);
          if (std::abs(av) > feas)
            std::fprintf(stderr, "  artificial %d = %.6e (basic? %d) row b=%.4e\n", i, av,
                         state_[lp_.n + m_ + i] == State::Basic, b_(i));
        }
        int shown = 0;
        for (int j = 0; j < n_total_ && shown < 12; ++j) {
          if (state_[j] == State::Basic || hi_[j] - lo_[j] < 1e-15) continue;
          const double d = cost(j) - y.dot(a_.col(j));
          const bool elig = (state_[j] == State::AtLo) ? (d > 1e-9) : (d < -1e-9);
          if (std::abs(d) > 1e-7) {
            std::fprintf(stderr, "  col %d state %d d=%.4e eligible=%d\n", j, (int)state_[j], d,
                         elig);
            ++shown;
          }
        }
#endif
        break;  // stalled; the certificate below decides
      }
      refactor();
    }
    if (art_sum > feas) {
      refactor();
      const double cert = safe_dual_bound(cost);  // upper bound on max(-sum art)
      sol.iterations = iters_;
      if (cert < -1e-7 * (1.0 + b_.cwiseAbs().maxCoeff())) {
        sol.status = LpStatus::Infeasible;  // certified
      } else {
        sol.status = LpStatus::Numerical;  // unproven; still return a valid bound
        sol.obj = safe_dual_bound(phase2_cost());
      }
      return sol;
    }
    pin_artificials();

    // phase 2
    cost = phase2_cost();
    if (!iterate(cost, cap)) {
      refactor();
      sol.status = LpStatus::IterLimit;
      sol.obj = safe_dual_bound(cost);
      sol.iterations = iters_;
      return sol;
    }

    refactor();
#ifdef NCGWC_LP_DEBUG
    {
      std::vector<int> count(n_total_, 0);
      for (int i = 0; i < m_; ++i) count[basis_[i]]++;
      for (int j = 0; j < n_total_; ++j) {
        const bool in_basis = count[j] > 0;
        if (count[j] > 1) std::fprintf(stderr, "var %d appears %d times in basis\n", j, count[j]);
        if (in_basis != (state_[j] == State::Basic))
          std::fprintf(stderr, "desync var %d: state %d in_basis %d\n", j, (int)state_[j],
                       (int)in_basis);
      }
    }
#endif
    sol.x.resize(lp_.n);
    for (int j = 0; j < lp_.n; ++j) sol.x[j] = value_of(j);
    // report the certified dual bound: valid regardless of basis quality,
    // and equal to the primal value at a clean optimum
    sol.obj = safe_dual_bound(cost);
    sol.iterations = iters_;
    sol.status = primal_feasible() ? LpStatus::Optimal : LpStatus::Numerical;
    if (warm && sol.status == LpStatus::Optimal) export_warm(*warm);
    return sol;
  }

 private:
  void init_basis() {
    state_.assign(n_total_, State::AtLo);
    xn_.assign(n_total_, 0.0);
    for (int j = 0; j < lp_.n + m_; ++j) {
      const double v = (std::abs(lo_[j]) <= std::abs(hi_[j])) ? lo_[j] : hi_[j];
      state_[j] = (v == lo_[j]) ? State::AtLo : State::AtHi;
      xn_[j] = v;
    }
    Vec r = b_;
    for (int j = 0; j < lp_.n + m_; ++j) {
      if (xn_[j] != 0.0) r -= a_.col(j) * xn_[j];
    }
    basis_.resize(m_);
    binv_ = Mat::Zero(m_, m_);
    xb_ = Vec::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      const int aj = lp_.n + m_ + i;
      const double sgn = r(i) >= 0.0 ? 1.0 : -1.0;
      a_(i, aj) = sgn;
      lo_[aj] = 0.0;
      hi_[aj] = std::abs(r(i));  // artificials only ever shrink toward zero
      basis_[i] = aj;
      state_[aj] = State::Basic;
      binv_(i, i) = sgn;
      xb_(i) = std::abs(r(i));
    }
  }

  double value_of(int j) const {
    if (state_[j] == State::Basic) {
      for (int i = 0; i < m_; ++i)
        if (basis_[i] == j) return xb_(i);
    }
    return xn_[j];
  }

  void pin_artificials() {
    // pivot basic artificials out when a usable column exists
    for (int i = 0; i < m_; ++i) {
      const int bj = basis_[i];
      if (bj < lp_.n + m_) continue;
      const Eigen::RowVectorXd brow = binv_.row(i);
      int repl = -1;
      double best = opts_.pivot_tol;
      for (int j = 0; j < lp_.n + m_; ++j) {
        if (state_[j] == State::Basic) continue;
        if (hi_[j] - lo_[j] < 1e-15) continue;
        const double w = brow.dot(a_.col(j));
        if (std::abs(w) > best) {
          best = std::abs(w);
          repl = j;
        }
      }
      if (repl >= 0) {
        const Vec w = binv_ * a_.col(repl);
        const double val = xn_[repl];
        pivot(repl, i, w);
        state_[bj] = State::AtLo;
        xn_[bj] = 0.0;
        xb_(i) = val;  // degenerate swap; the artificial leaves at zero
      }
    }
    for (int i = 0; i < m_; ++i) {
      const int aj = lp_.n + m_ + i;
      lo_[aj] = hi_[aj] = 0.0;
      if (state_[aj] != State::Basic) xn_[aj] = 0.0;
    }
    refactor();
  }

  void refactor() {
    Mat basis_mat(m_, m_);
    for (int i = 0; i < m_; ++i) basis_mat.col(i) = a_.col(basis_[i]);
    binv_ = basis_mat.partialPivLu().inverse();
    Vec r = b_;
    for (int j = 0; j < n_total_; ++j) {
      if (state_[j] != State::Basic && xn_[j] != 0.0) r -= a_.col(j) * xn_[j];
    }
    xb_ = binv_ * r;
  }

  void pivot(int enter, int leave_row, const Vec& w) {
    const double piv = w(leave_row);
    binv_.row(leave_row) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == leave_row) continue;
      const double f = w(i);
      if (f != 0.0) binv_.row(i) -= f * binv_.row(leave_row);
    }
    basis_[leave_row] = enter;
    state_[enter] = State::Basic;
  }

  // one phase of bounded simplex with the given maximization costs
  bool iterate(const Vec& cost, int cap) {
    int stall = 0;
    bool bland = false;
    bool just_refactored = false;
    int since_refactor = 0;
    while (iters_ < cap) {
      ++iters_;
      ++since_refactor;
      if (since_refactor > 60) {
        refactor();
        since_refactor = 0;
      }
      // duals and reduced costs (one gemv for the whole pricing pass)
      Vec cb(m_);
      for (int i = 0; i < m_; ++i) cb(i) = cost(basis_[i]);
      const Eigen::RowVectorXd y = cb.transpose() * binv_;
      Vec red = cost - (y * a_).transpose();
      int enter = -1;
      double best = 0.0;
      const double tol = opts_.dual_tol * (1.0 + cost.cwiseAbs().maxCoeff());
      for (int j = 0; j < n_total_; ++j) {
        if (state_[j] == State::Basic) continue;
        if (hi_[j] - lo_[j] < 1e-15) continue;
        const double d = red(j);
        const bool eligible = (state_[j] == State::AtLo) ? (d > tol) : (d < -tol);
        if (!eligible) continue;
        if (bland) {
          enter = j;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
        }
      }
      if (enter < 0) return true;  // optimal for this phase

      const double sigma = (state_[enter] == State::AtLo) ? 1.0 : -1.0;
      const Vec w = binv_ * a_.col(enter);
      const double wmax = w.cwiseAbs().maxCoeff();
      if (wmax > 1e9 && !just_refactored) {
        // the basis inverse has degraded; rebuild and retry this iteration
        refactor();
        since_refactor = 0;
        just_refactored = true;
        continue;
      }
      // two-pass ratio test (Harris style): first the relaxed step limit
      // with a feasibility tolerance, then the largest pivot among the rows
      // that block within it
      const double zero_w = 1e-12;
      const double flip_range = hi_[enter] - lo_[enter];
      double t_relaxed = flip_range;
      for (int i = 0; i < m_; ++i) {
        const double swi = sigma * w(i);
        if (std::abs(swi) <= zero_w) continue;
        const int bj = basis_[i];
        const double delta = 1e-9 * (1.0 + std::abs(xb_(i)));
        const double t = swi > 0.0 ? (xb_(i) - lo_[bj] + delta) / swi
                                   : (hi_[bj] + delta - xb_(i)) / (-swi);
        t_relaxed = std::min(t_relaxed, std::max(0.0, t));
      }
      int leave = -1;  // -1: bound flip
      double best_piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double swi = sigma * w(i);
        if (std::abs(swi) <= zero_w) continue;
        const int bj = basis_[i];
        const double t = swi > 0.0 ? (xb_(i) - lo_[bj]) / swi : (hi_[bj] - xb_(i)) / (-swi);
        if (t <= t_relaxed) {
          const double piv = std::abs(swi);
          if (piv > best_piv + 1e-15 ||
              (piv > best_piv - 1e-15 && leave >= 0 && bj < basis_[leave])) {
            best_piv = piv;
            leave = i;
          }
        }
      }
      double tmax;
      if (leave < 0) {
        tmax = flip_range;
      } else {
        const int bj = basis_[leave];
        const double swi = sigma * w(leave);
        tmax = swi > 0.0 ? (xb_(leave) - lo_[bj]) / swi : (hi_[bj] - xb_(leave)) / (-swi);
        tmax = std::max(0.0, tmax);
        if (tmax >= flip_range) {
          leave = -1;
          tmax = flip_range;
        }
      }
      if (!std::isfinite(tmax)) return false;
      if (leave >= 0 && best_piv < 1e-7 * std::max(1.0, wmax) && !just_refactored) {
        refactor();
        since_refactor = 0;
        just_refactored = true;
        continue;
      }
      just_refactored = false;

      if (tmax <= 1e-12) {
        ++stall;
        if (stall > 4 * (m_ + 16)) bland = true;
      } else {
        stall = 0;
        bland = false;
      }

      // apply the step
      xb_ -= sigma * tmax * w;
#ifdef NCGWC_LP_DEBUG
      for (int i = 0; i < m_; ++i) {
        const int bj = basis_[i];
        if ((i != leave) &&
            (xb_(i) < lo_[bj] - 1e-6 || xb_(i) > hi_[bj] + 1e-6)) {
          std::fprintf(stderr,
                       "iter %d: basic row %d var %d out of bounds: %.9g not in [%.9g, %.9g] "
                       "(enter %d sigma %.0f tmax %.3e w %.3e)\n",
                       iters_, i, bj, xb_(i), lo_[bj], hi_[bj], enter, sigma, tmax, w(i));
        }
      }
#endif
      if (leave < 0) {
        // bound flip
        state_[enter] = (state_[enter] == State::AtLo) ? State::AtHi : State::AtLo;
        xn_[enter] = (state_[enter] == State::AtLo) ? lo_[enter] : hi_[enter];
      } else {
        const int out = basis_[leave];
        const double out_val = (sigma * w(leave) > 0.0) ? lo_[out] : hi_[out];
        state_[out] = (out_val == lo_[out]) ? State::AtLo : State::AtHi;
        xn_[out] = out_val;
        const double enter_val = xn_[enter] + sigma * tmax;
        pivot(enter, leave, w);
        xb_(leave) = enter_val;
      }
    }
    return false;
  }

  bool primal_feasible() {
    const double tol = opts_.feas_tol * (1.0 + b_.cwiseAbs().maxCoeff());
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      if (xb_(i) < lo_[j] - tol || xb_(i) > hi_[j] + tol) return false;
    }
    Vec r = b_;
    for (int j = 0; j < n_total_; ++j) {
      const double v = value_of(j);
      if (v != 0.0) r -= a_.col(j) * v;
    }
    return r.cwiseAbs().maxCoeff() <= tol * 10.0;
  }

  const LpProblem& lp_;
  LpOptions opts_;
  int m_ = 0, n_total_ = 0;
  Mat a_;
  Vec b_, xb_;
  Mat binv_;
  std::vector<int> basis_;
  std::vector<State> state_;
  std::vector<double> lo_, hi_, xn_, art_bound_;
  int iters_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpProblem& lp, const LpOptions& opts, LpWarmStart* warm) {
  if (lp.rows.empty()) {
    // pure box problem
    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x.resize(lp.n);
    sol.obj = 0.0;
    for (int j = 0; j < lp.n; ++j) {
      sol.x[j] = lp.obj[j] >= 0.0 ? lp.hi[j] : lp.lo[j];
      sol.obj += lp.obj[j] * sol.x[j];
    }
    return sol;
  }
  Simplex s(lp, opts);
  return s.run(warm);
}

}  // namespace ncgwc

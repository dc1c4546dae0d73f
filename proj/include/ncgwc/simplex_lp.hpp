#pragma once

#include "ncgwc/qcqp.hpp"

namespace ncgwc {

// Dense bounded-variable linear programming by two-phase revised simplex.
// Small-scale workhorse behind the relaxation bounds; every variable must
// carry finite bounds.

struct LpRow {
  std::vector<std::pair<int, double>> terms;
  Sense sense = Sense::LE;
  double rhs = 0.0;
};

struct LpProblem {
  int n = 0;
  std::vector<double> lo, hi;
  std::vector<double> obj;  // maximized
  std::vector<LpRow> rows;

  int add_col(double lo_, double hi_, double obj_ = 0.0);
  void add_row(LpRow row) { rows.push_back(std::move(row)); }
};

enum class LpStatus { Optimal, Infeasible, IterLimit, Numerical };

struct LpSolution {
  LpStatus status = LpStatus::Numerical;
  double obj = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

struct LpOptions {
  double pivot_tol = 1e-9;
  double dual_tol = 1e-9;
  double feas_tol = 1e-7;
  int max_iters = 0;  // 0 = automatic from size
};

// Reusable basis snapshot for solving a sequence of LPs that share the same
// rows (different objectives or mildly different bounds). A snapshot whose
// basis is no longer primal feasible is silently ignored.
struct LpWarmStart {
  bool valid = false;
  std::vector<int> basis;             // m column indices into [0, n + m)
  std::vector<unsigned char> at_hi;   // n + m nonbasic states
};

LpSolution solve_lp(const LpProblem& lp, const LpOptions& opts = {},
                    LpWarmStart* warm = nullptr);

}  // namespace ncgwc

#pragma once

#include "ncgwc/qcqp.hpp"

namespace ncgwc {

struct BuilderOptions {
  CouplingSense coupling = CouplingSense::Equality;  // direction PEP only
  PsdMode psd_mode = PsdMode::LazyCuts;
  // scale of the heuristic box on ||g_{k-1}||^2 in the direction PEP
  double g_prev_box = 64.0;
  // emit the implied degree-reduction chains that tighten the relaxation
  bool strengthen = true;
};

// Worst-case next-direction QCQP: maximize ||d_k||^2 subject to the
// line-search identities, the update-parameter definition, the coupling
// ||d_{k-1}||^2 ~ c ||g_{k-1}||^2 and two-point interpolation, with
// ||g_k||^2 = 1. Gram order: [x_{k-1} | g_{k-1} | g_k | d_{k-1}].
QcqpProblem build_direction_pep(double eta, const ClassParams& p, double c_prev,
                                const BuilderOptions& opts = {});

// N-step ratio (f_{k+N}-f_*)/(f_k-f_*) with the initial direction budgeted
// by ||d_k||^2 <= c ||g_k||^2. Gram order: [d_k | g_k..g_{k+N} | x_k..x_{k+N}].
QcqpProblem build_lyapunov_upper(double eta, const ClassParams& p, double c, int n_steps,
                                 const BuilderOptions& opts = {});

// Same ratio from initialization: d_0 pinned to the gradient, no budget.
QcqpProblem build_exact_upper(double eta, const ClassParams& p, int n_steps,
                              const BuilderOptions& opts = {});

// Feasibility problem with the update parameters frozen at given values;
// any feasible point certifies a lower bound. c absent = exact flavor
// (d_k = g_k). Gram order: [x_k | g_k..g_{k+N} | d_k].
QcqpProblem build_lower_fixed_beta(double eta, const ClassParams& p, std::optional<double> c,
                                   int n_steps, const std::vector<double>& betas,
                                   const BuilderOptions& opts = {});

// Map a solved point back to triplets via the Gram factor H (taken from the
// point when present, else from an eigenvalue factorization of G).
TripletSet extract_triplets(const QcqpProblem& problem, const Point& incumbent,
                            double psd_tol = 1e-6);

// Worst-case quality cap for the FR update parameter when the previous
// ratio can be anywhere in (1, c_max]: max of fr_beta_bound over that range.
double fr_beta_cap(double q, double c_max);

}  // namespace ncgwc

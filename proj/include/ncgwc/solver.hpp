#pragma once

#include "ncgwc/local_nlp.hpp"
#include "ncgwc/qcqp.hpp"

#include <optional>

namespace ncgwc {

struct SolveOptions {
  double tol_rel = 1e-3;
  long max_nodes = 100000;
  double time_limit_s = 600.0;
  uint64_t seed = 0;
  int init_random_cuts = 48;  // size of the random unit-vector cut pool
  int cut_rounds_root = 120;
  int cut_rounds_node = 30;
  int obbt_rounds = 2;
  bool obbt = true;
  int node_obbt_interval = 25;
  int polish_interval = 40;  // AL polish from node LP points
  int stage2_starts = 6;
  std::optional<Point> warm_start;
  bool verbose = false;
};

struct SolveReport {
  double upper_bound = 0.0;     // certified bound (maximization)
  double incumbent_value = 0.0; // best feasible value found
  Point incumbent;
  double rel_gap = 0.0;
  long nodes = 0;
  long cuts = 0;
  double wall_time_s = 0.0;     // excluded from the canonical serialization
  std::string termination;      // gap | nodes | time | root | no-incumbent
  // true iff incumbent <= bound held (within 1e-9) throughout the search
  bool sound = true;

  // deterministic JSON; pass include_timing for the wall clock
  std::string to_json(bool include_timing = false) const;
};

// Stage 1: a feasible point built from an actual method run on a random
// quadratic with spectrum in [mu, L], rescaled to the normalization.
Point stage1_feasible(const QcqpProblem& p, uint64_t seed);

// Stage 2: local improvement (augmented Lagrangian); falls back to the
// input on failure.
Point stage2_local(const QcqpProblem& p, const Point& incumbent, const AlOptions& opts = {});

// Stage 3: certified global bound by spatial branch-and-bound over the
// McCormick relaxation with lazy PSD cuts.
SolveReport stage3_global(const QcqpProblem& p, const Point& incumbent, const SolveOptions& opts);

// Staged driver: stage-1 multi-start, stage-2 polish, stage-3 certify,
// re-solving with doubled boxes if the incumbent pins a heuristic box.
SolveReport solve_pep(const QcqpProblem& p, const SolveOptions& opts = {});

// Most-negative unit eigenvector cut, if G has an eigenvalue below -tol.
std::optional<std::pair<Vec, double>> separate_psd_cut(const Mat& g, double tol = 1e-6);

// Warm start for a lower (fixed-beta) problem from the matching upper
// problem's solution: Gram entries are copied column-by-column, step sizes
// recovered by projection, aggregates and duplicates completed.
Point warm_lower_from_upper(const QcqpProblem& lower, const QcqpProblem& upper,
                            const Point& upper_point);

// Evaluate the definitional duplicates (theta blocks, product chains) of a
// partially filled point in declaration order.
void complete_defined_vars(const QcqpProblem& p, Point& x);

}  // namespace ncgwc

#include "ncgwc/bounds.hpp"
#include "ncgwc/pep_builder.hpp"
#include "ncgwc/solver.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ncgwc;
using Catch::Approx;

TEST_CASE("separate_psd_cut") {
  CHECK(!separate_psd_cut(Mat::Identity(3, 3)).has_value());
  Mat g = Mat::Zero(2, 2);
  g(0, 0) = 1.0;
  g(1, 1) = -1.0;
  const auto cut = separate_psd_cut(g);
  REQUIRE(cut.has_value());
  CHECK(std::abs(cut->first(1)) == Approx(1.0));
  CHECK(cut->second == Approx(-1.0));

  // random indefinite matrices: the returned cut is strictly violated and
  // every PSD matrix satisfies it
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 10; ++rep) {
    Mat a(7, 7);
    for (int i = 0; i < 7; ++i)
      for (int j = 0; j < 7; ++j) a(i, j) = n01(rng);
    const Mat sym = 0.5 * (a + a.transpose());
    const auto c = separate_psd_cut(sym);
    if (!c) continue;
    const Vec& u = c->first;
    CHECK(u.dot(sym * u) == Approx(c->second).margin(1e-9));
    CHECK(c->second < 0.0);
    for (int s = 0; s < 20; ++s) {
      Mat b(7, 7);
      for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) b(i, j) = n01(rng);
      const Mat psd = b.transpose() * b;
      CHECK(u.dot(psd * u) >= -1e-12);
    }
  }
}

TEST_CASE("stage1 produces feasible points") {
  const ClassParams cp(0.5, 1.0);
  const QcqpProblem pd = build_direction_pep(1.0, cp, 10.0);
  const Point x = stage1_feasible(pd, 3);
  CHECK(pd.max_violation(x) <= 1e-8);
  CHECK(pd.objective.eval(x) >= 1.0);  // c >= 1 so ||d_k||^2 >= ... > 0

  const QcqpProblem pl = build_lyapunov_upper(1.0, cp, 1.125, 2);
  const Point xl = stage1_feasible(pl, 5);
  CHECK(pl.max_violation(xl) <= 1e-8);
  CHECK(pl.objective.eval(xl) > 0.0);
  CHECK(pl.objective.eval(xl) < 1.0);

  const QcqpProblem pe = build_exact_upper(0.0, cp, 2);
  const Point xe = stage1_feasible(pe, 7);
  CHECK(pe.max_violation(xe) <= 1e-8);

  // determinism of the construction
  const Point x2 = stage1_feasible(pd, 3);
  REQUIRE(x.size() == x2.size());
  for (size_t i = 0; i < x.size(); ++i) CHECK(x[i] == x2[i]);
}

TEST_CASE("stage2 improves the direction incumbent towards the lemma value") {
  const ClassParams cp(0.5, 1.0);
  const QcqpProblem p = build_direction_pep(1.0, cp, 10.0);
  double best = -1e300;
  for (int s = 0; s < 6; ++s) {
    const Point x0 = stage1_feasible(p, 11 + s);
    const Point x1 = stage2_local(p, x0);
    CHECK(p.max_violation(x1) <= 1e-6);
    CHECK(p.objective.eval(x1) >= p.objective.eval(x0) - 1e-10);
    best = std::max(best, p.objective.eval(x1));
  }
  CHECK(best >= 1.125 - 1e-4);
}

TEST_CASE("stage3 certifies the PRP direction bound at q=0.5, c=10") {
  const ClassParams cp(0.5, 1.0);
  const QcqpProblem p = build_direction_pep(1.0, cp, 10.0);
  SolveOptions opts;
  opts.tol_rel = 1e-3;
  opts.max_nodes = 20000;
  opts.seed = 1;
  const SolveReport rep = solve_pep(p, opts);
  INFO(rep.to_json());
  CHECK(rep.sound);
  CHECK(rep.rel_gap <= 1e-3 + 1e-9);
  const double target = prp_direction_bound(cp.q()).c;
  CHECK(std::abs(rep.upper_bound - target) / target <= 1.5e-3);
  CHECK(rep.incumbent_value <= rep.upper_bound + 1e-9);
}

TEST_CASE("solve report determinism") {
  const ClassParams cp(0.5, 1.0);
  const QcqpProblem p = build_direction_pep(0.0, cp, 2.0);
  SolveOptions opts;
  opts.tol_rel = 1e-3;
  opts.max_nodes = 5000;
  opts.seed = 7;
  const SolveReport a = solve_pep(p, opts);
  const SolveReport b = solve_pep(p, opts);
  CHECK(a.to_json() == b.to_json());
}

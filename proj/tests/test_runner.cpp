#include "ncgwc/bounds.hpp"
#include "ncgwc/extension.hpp"
#include "ncgwc/interpolation.hpp"
#include "ncgwc/runner.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace ncgwc;
using Catch::Approx;

namespace {

TripletSetFile example1() {
  return load_triplet_set(std::string(NCGWC_DATA_DIR) + "/example1.json");
}

QuadraticOracle diag_quadratic(double a0, double a1) {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = a0;
  a(1, 1) = a1;
  return QuadraticOracle(a, Vec::Zero(2));
}

}  // namespace

TEST_CASE("beta_update") {
  Vec z2 = Vec::Zero(2);
  Vec gp(2), gn(2);
  gp << 1, 0;
  CHECK(beta_update(z2, gp, 1.0) == Approx(0.0));
  gn << 0, 1;  // orthogonal, unit norms
  CHECK(beta_update(gn, gp, 1.0) == Approx(1.0));
  gn << 0.3, -0.4;
  CHECK(beta_update(gn, gp, 1.0) == Approx(-0.05).epsilon(1e-14));
  CHECK_THROWS(beta_update(gn, z2, 1.0));
  // FR value is always nonnegative
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    Vec a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      a(j) = n01(rng);
      b(j) = n01(rng);
    }
    CHECK(beta_update(a, b, 0.0) >= 0.0);
  }
}

TEST_CASE("PRP run on a quadratic decreases and satisfies the rate envelope") {
  const double q = 0.1;
  QuadraticOracle f = diag_quadratic(1.0, 10.0);
  MethodConfig cfg;
  cfg.rule = UpdateRule::PRP;
  cfg.max_iters = 2;
  Vec x0(2);
  x0 << 1, 1;
  const RunTrace t = run_method(f, x0, cfg);
  REQUIRE(t.iterates() == 3);
  CHECK(t.f[1] < t.f[0]);
  CHECK(t.f[2] < t.f[1]);
  const double envelope = prp_rate(q) * prp_rate(q);
  CHECK(t.f[2] / t.f[0] <= envelope * (1 + 1e-6));
}

TEST_CASE("line-search identities hold along every run") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 4; ++rep) {
    QuadraticOracle f = QuadraticOracle::random(ClassParams(0.2, 1.7), 4, 40 + rep);
    Vec x0(4);
    for (int j = 0; j < 4; ++j) x0(j) = n01(rng);
    MethodConfig cfg;
    cfg.rule = rep % 2 == 0 ? UpdateRule::PRP : UpdateRule::FR;
    cfg.max_iters = 5;
    const RunTrace t = run_method(f, x0, cfg);
    for (int k = 0; k + 1 < t.iterates(); ++k) {
      const Vec& gk = t.g[k];
      const Vec& gn = t.g[k + 1];
      const Vec& dk = t.d[k];
      const double scale = std::max(1.0, gn.norm() * dk.norm());
      CHECK(std::abs(gn.dot(dk)) / scale < 1e-6);
      CHECK(std::abs(gn.dot(t.x[k] - t.x[k + 1])) /
                std::max(1.0, gn.norm() * (t.x[k] - t.x[k + 1]).norm()) <
            1e-6);
      CHECK(gk.dot(dk) == Approx(gk.squaredNorm()).epsilon(1e-6));
      // monotone decrease
      CHECK(t.f[k + 1] < t.f[k]);
    }
  }
}

TEST_CASE("FR terminates in two steps on 2-d quadratics") {
  QuadraticOracle f = diag_quadratic(0.7, 3.1);
  MethodConfig cfg;
  cfg.rule = UpdateRule::FR;
  cfg.max_iters = 2;
  Vec x0(2);
  x0 << 0.3, -1.2;
  const RunTrace t = run_method(f, x0, cfg);
  REQUIRE(t.iterates() == 3);
  CHECK(t.g[2].norm() < 1e-8);
}

TEST_CASE("example 1 replay reproduces the table values") {
  const auto [params, set] = example1();
  ExtensionFunction f(set, params);
  const Vec x0 = set.items[set.index_of("0")].x;
  const Vec x1 = set.items[set.index_of("1")].x;
  const Vec x2 = set.items[set.index_of("2")].x;
  const Vec g0 = set.items[set.index_of("0")].g;
  // the worst case starts from a non-gradient direction with quality
  // c0 = (1+q)^2/(4q); recover it from the first recorded step
  const Vec d0 = (g0.squaredNorm() / g0.dot(x0 - x1)) * (x0 - x1);
  CHECK(d0.squaredNorm() / g0.squaredNorm() == Approx(1.125).margin(1e-4));

  MethodConfig cfg;
  cfg.rule = UpdateRule::PRP;
  cfg.max_iters = 2;
  cfg.d0 = d0;
  const RunTrace t = run_method(f, x0, cfg);
  REQUIRE(t.iterates() == 3);
  CHECK(t.f[0] == Approx(1.0).margin(1e-3));
  CHECK(t.f[1] == Approx(0.267353).margin(1e-3));
  CHECK(t.f[2] == Approx(0.056104).margin(1e-3));
  CHECK((t.x[2] - x2).norm() < 1e-3);
}

TEST_CASE("direction quality") {
  QuadraticOracle f = diag_quadratic(1.0, 4.0);
  MethodConfig cfg;
  cfg.rule = UpdateRule::GDEL;
  cfg.max_iters = 1;
  Vec x0(2);
  x0 << 1, 1;
  const RunTrace t = run_method(f, x0, cfg);
  const auto [c, st] = direction_quality(t, 0);
  CHECK(c == Approx(1.0).epsilon(1e-12));  // d0 = g0
  CHECK(st == Approx(0.0).margin(1e-7));

  // ||d||^2 = 2||g||^2 with <g,d> = ||g||^2 -> sin theta = sqrt(1/2)
  RunTrace t2 = t;
  Vec d(2);
  d << t.g[0](0) + t.g[0](1), t.g[0](1) - t.g[0](0);  // g + g_perp
  t2.d[0] = d;
  const auto [c2, st2] = direction_quality(t2, 0);
  CHECK(c2 == Approx(2.0).epsilon(1e-12));
  CHECK(st2 == Approx(std::sqrt(0.5)).epsilon(1e-12));
}

TEST_CASE("PRP direction quality stays within the analytic bound") {
  const ClassParams p(0.25, 1.0);
  const double cap = prp_direction_bound(p.q()).c;
  for (int rep = 0; rep < 5; ++rep) {
    QuadraticOracle f = QuadraticOracle::random(p, 5, 300 + rep);
    std::mt19937_64 rng(900 + rep);
    std::normal_distribution<double> n01;
    Vec x0(5);
    for (int j = 0; j < 5; ++j) x0(j) = n01(rng);
    MethodConfig cfg;
    cfg.rule = UpdateRule::PRP;
    cfg.max_iters = 6;
    const RunTrace t = run_method(f, x0, cfg);
    for (int k = 0; k < static_cast<int>(t.d.size()); ++k) {
      if (t.g[k].norm() < 1e-12) break;
      CHECK(t.direction_quality(k).first <= cap + 1e-8);
    }
  }
}

TEST_CASE("scaling the direction leaves the iterate and angle unchanged") {
  QuadraticOracle f = QuadraticOracle::random(ClassParams(0.3, 1.4), 3, 77);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n01;
  Vec x0(3), p(3);
  for (int j = 0; j < 3; ++j) {
    x0(j) = n01(rng);
    p(j) = n01(rng);
  }
  const Vec g0 = f.gradient(x0);
  Vec d0 = g0 + 0.7 * (p - p.dot(g0) / g0.squaredNorm() * g0);
  MethodConfig cfg;
  cfg.rule = UpdateRule::PRP;
  cfg.max_iters = 1;
  cfg.d0 = d0;
  const RunTrace t1 = run_method(f, x0, cfg);
  const double alpha = g0.dot(d0) / d0.squaredNorm();
  cfg.d0 = alpha * d0;
  const RunTrace t2 = run_method(f, x0, cfg);
  CHECK((t1.x[1] - t2.x[1]).norm() < 1e-10);
  const double s1 = std::sqrt(1.0 - std::pow(g0.dot(t1.d[0]), 2) /
                                        (g0.squaredNorm() * t1.d[0].squaredNorm()));
  const double s2 = std::sqrt(1.0 - std::pow(g0.dot(t2.d[0]), 2) /
                                        (g0.squaredNorm() * t2.d[0].squaredNorm()));
  CHECK(s1 == Approx(s2).margin(1e-10));
}

TEST_CASE("GDEL, PRP and FR agree on the first step when d0 = g0") {
  QuadraticOracle f = QuadraticOracle::random(ClassParams(0.2, 1.0), 3, 11);
  Vec x0(3);
  x0 << 1, -2, 0.5;
  MethodConfig cfg;
  cfg.max_iters = 1;
  cfg.rule = UpdateRule::GDEL;
  const RunTrace tg = run_method(f, x0, cfg);
  cfg.rule = UpdateRule::PRP;
  const RunTrace tp = run_method(f, x0, cfg);
  cfg.rule = UpdateRule::FR;
  const RunTrace tf = run_method(f, x0, cfg);
  CHECK((tg.x[1] - tp.x[1]).norm() < 1e-12);
  CHECK((tg.x[1] - tf.x[1]).norm() < 1e-12);
}

TEST_CASE("FR runs obey the per-step rate factor from the recursion") {
  const ClassParams p(0.2, 1.0);
  QuadraticOracle f = QuadraticOracle::random(p, 4, 1234);
  Vec x0(4);
  x0 << 1, 1, -1, 0.3;
  MethodConfig cfg;
  cfg.rule = UpdateRule::FR;
  cfg.max_iters = 5;
  const RunTrace t = run_method(f, x0, cfg);
  const double fstar = f.min_value();
  double c = 1.0;
  for (int k = 0; k + 1 < t.iterates(); ++k) {
    const double eps = std::sqrt(std::max(0.0, 1.0 - 1.0 / c));
    const double factor = asd_rate(p.q(), eps);
    CHECK(t.f[k + 1] - fstar <= factor * (t.f[k] - fstar) * (1 + 1e-6) + 1e-15);
    c = fr_direction_recursion(p.q(), c).c;
  }
}

TEST_CASE("fixed beta and gamma replay") {
  QuadraticOracle f = diag_quadratic(1.0, 3.0);
  Vec x0(2);
  x0 << 1, 1;
  MethodConfig cfg;
  cfg.rule = UpdateRule::PRP;
  cfg.max_iters = 3;
  const RunTrace t = run_method(f, x0, cfg);
  MethodConfig replay;
  replay.rule = UpdateRule::FixedBetas;
  replay.max_iters = 3;
  replay.fixed_betas = t.beta;
  replay.fixed_betas.resize(2, 0.0);
  replay.fixed_gammas = t.gamma;
  const RunTrace t2 = run_method(f, x0, replay);
  REQUIRE(t2.iterates() == t.iterates());
  for (int k = 0; k < t.iterates(); ++k) CHECK((t.x[k] - t2.x[k]).norm() < 1e-12);
}

TEST_CASE("trace csv export") {
  QuadraticOracle f = diag_quadratic(1.0, 2.0);
  Vec x0(2);
  x0 << 1, 1;
  MethodConfig cfg;
  cfg.rule = UpdateRule::PRP;
  cfg.max_iters = 2;
  const RunTrace t = run_method(f, x0, cfg);
  std::ostringstream ss;
  t.to_csv(ss);
  const std::string text = ss.str();
  CHECK(text.find("k,f,grad_norm,gamma,beta,c,sin_theta") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == t.iterates() + 1);
}

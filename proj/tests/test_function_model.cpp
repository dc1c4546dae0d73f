#include "ncgwc/extension.hpp"
#include "ncgwc/interpolation.hpp"
#include "ncgwc/line_search.hpp"
#include "ncgwc/oracle.hpp"
#include "ncgwc/types.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ncgwc;
using Catch::Approx;

namespace {

// Triplets sampled from a known member of F_{mu,L} are interpolable by
// construction; this is the generator behind most of the property checks.
TripletSet sample_from_oracle(const Oracle& oracle, const std::vector<Vec>& points) {
  TripletSet s;
  int idx = 0;
  for (const Vec& x : points) {
    s.push_back(std::to_string(idx++), Triplet(x, oracle.gradient(x), oracle.value(x)));
  }
  return s;
}

TripletSet diag_quadratic_set(double mu, double L) {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = mu;
  a(1, 1) = L;
  QuadraticOracle oracle(a, Vec::Zero(2));
  std::vector<Vec> pts;
  pts.push_back((Vec(2) << 1, 0).finished());
  pts.push_back((Vec(2) << 0, 1).finished());
  pts.push_back(Vec::Zero(2));
  return sample_from_oracle(oracle, pts);
}

TripletSetFile example1() {
  return load_triplet_set(std::string(NCGWC_DATA_DIR) + "/example1.json");
}

}  // namespace

TEST_CASE("interpolation residuals: identity case") {
  TripletSet s;
  s.push_back("a", Triplet(Vec::Zero(2), Vec::Zero(2), 0.0));
  s.push_back("b", Triplet(Vec::Zero(2), Vec::Zero(2), 0.0));
  const Mat r = interpolation_residuals(s, ClassParams(0.5, 1.0));
  CHECK(r.cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-15));
}

TEST_CASE("interpolation residuals: analytic quadratic is interpolable") {
  const double mu = 1.0, L = 2.0;
  const TripletSet s = diag_quadratic_set(mu, L);
  const Mat r = interpolation_residuals(s, ClassParams(mu, L));
  CHECK(min_residual(r) >= 0.0);
}

TEST_CASE("interpolation residuals: errors") {
  TripletSet s;
  s.push_back("a", Triplet(Vec::Zero(2), Vec::Zero(2), 0.0));
  CHECK_THROWS(interpolation_residuals(s, ClassParams(0.5, 1.0)));  // needs >= 2
  CHECK_THROWS(ClassParams(1.0, 1.0));                              // mu >= L
  TripletSet t;
  t.push_back("a", Triplet(Vec::Zero(2), Vec::Zero(2), 0.0));
  CHECK_THROWS(t.push_back("b", Triplet(Vec::Zero(3), Vec::Zero(3), 0.0)));
}

TEST_CASE("example 1 fixture is interpolable") {
  const auto [params, set] = example1();
  CHECK(params.q() == Approx(0.5));
  const Mat r = interpolation_residuals(set, params);
  CHECK(min_residual(r) >= -1e-6);
  CHECK(is_interpolable(set, params));
}

TEST_CASE("extension: single triplet collapses to mu/2 ||y||^2") {
  TripletSet s;
  s.push_back("0", Triplet(Vec::Zero(3), Vec::Zero(3), 0.0));
  const ClassParams p(0.4, 1.3);
  ExtensionFunction f(s, p);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 5; ++t) {
    Vec y(3);
    for (int i = 0; i < 3; ++i) y(i) = n01(rng);
    CHECK(f.value(y) == Approx(0.5 * p.mu * y.squaredNorm()).margin(1e-12));
    CHECK((f.gradient(y) - p.mu * y).norm() == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("extension reproduces its own triplets") {
  const double mu = 1.0, L = 2.0;
  const TripletSet s = diag_quadratic_set(mu, L);
  ExtensionFunction f(s, ClassParams(mu, L));
  for (int i = 0; i < s.size(); ++i) {
    CHECK(f.value(s.items[i].x) == Approx(s.items[i].f).margin(1e-6));
    CHECK((f.gradient(s.items[i].x) - s.items[i].g).norm() == Approx(0.0).margin(1e-6));
  }
  // extension of a quadratic's own triplets touches the quadratic at (0.5,0.5)
  Vec y(2);
  y << 0.5, 0.5;
  CHECK(f.value(y) == Approx(0.5 * (mu * 0.25 + L * 0.25)).margin(1e-6));
}

TEST_CASE("example 1 extension values and gradients") {
  const auto [params, set] = example1();
  ExtensionFunction f(set, params);
  const int i2 = set.index_of("2");
  CHECK(f.value(set.items[i2].x) == Approx(0.056104).margin(1e-4));
  const int i0 = set.index_of("0");
  const Vec g0 = f.gradient(set.items[i0].x);
  CHECK(std::abs(g0(0) - 1.08734) < 1e-4);
  CHECK(std::abs(g0(1) - 0.237212) < 1e-4);
  CHECK(std::abs(g0(2)) < 1e-4);
  CHECK(std::abs(g0(3)) < 1e-4);
  for (int i = 0; i < set.size(); ++i) {
    CHECK(f.value(set.items[i].x) == Approx(set.items[i].f).margin(1e-6));
    CHECK((f.gradient(set.items[i].x) - set.items[i].g).norm() < 1e-6);
  }
}

TEST_CASE("extension gradient matches finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  const ClassParams p(0.3, 1.0);
  QuadraticOracle oracle = QuadraticOracle::random(p, 3, 5);
  std::vector<Vec> pts;
  for (int i = 0; i < 4; ++i) {
    Vec x(3);
    for (int j = 0; j < 3; ++j) x(j) = n01(rng);
    pts.push_back(x);
  }
  ExtensionFunction f(sample_from_oracle(oracle, pts), p);

  const double h = 1e-5;
  for (int t = 0; t < 50; ++t) {
    Vec y(3);
    for (int j = 0; j < 3; ++j) y(j) = 2.0 * n01(rng);
    const Vec g = f.gradient(y);
    Vec fd(3);
    for (int j = 0; j < 3; ++j) {
      Vec e = Vec::Zero(3);
      e(j) = h;
      fd(j) = (f.value(y + e) - f.value(y - e)) / (2 * h);
    }
    CHECK((g - fd).norm() <= 1e-5 * std::max(1.0, g.norm()) + 1e-7);
  }
}

TEST_CASE("extension curvature sandwich") {
  const auto [params, set] = example1();
  ExtensionFunction f(set, params);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 100; ++t) {
    Vec y(4), z(4);
    for (int j = 0; j < 4; ++j) {
      y(j) = n01(rng);
      z(j) = n01(rng);
    }
    const Vec dy = y - z;
    const double ip = (f.gradient(y) - f.gradient(z)).dot(dy);
    const double nn = dy.squaredNorm();
    CHECK(ip >= params.mu * nn - 1e-8);
    CHECK(ip <= params.L * nn + 1e-8);
  }
}

TEST_CASE("line search on quadratics matches closed form") {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1.0;
  QuadraticOracle f(a, Vec::Zero(2));
  Vec x(2), d(2);
  x << 1, 0;
  d << 1, 0;
  const auto r = exact_line_search(f, x, d);
  CHECK(r.gamma == Approx(1.0).epsilon(1e-12));
  CHECK(r.x_next.norm() == Approx(0.0).margin(1e-12));

  // generic quadratic, closed form gamma = <g,d>/(d'Ad), also via bisection
  QuadraticOracle f2 = QuadraticOracle::random(ClassParams(0.5, 2.0), 3, 9);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 10; ++t) {
    Vec xx(3), dd(3);
    for (int j = 0; j < 3; ++j) {
      xx(j) = n01(rng);
      dd(j) = n01(rng);
    }
    const Vec g = f2.gradient(xx);
    if (g.dot(dd) <= 0) dd = -dd;
    if (g.dot(dd) <= 0) continue;
    const double expect = g.dot(dd) / dd.dot(f2.matrix() * dd);
    const auto closed = exact_line_search(f2, xx, dd);
    CHECK(closed.gamma == Approx(expect).epsilon(1e-12));
    LineSearchOptions opts;
    opts.use_closed_form = false;
    const auto numeric = exact_line_search(f2, xx, dd, opts);
    CHECK(numeric.gamma == Approx(expect).epsilon(1e-6));
    // orthogonality after the step
    const Vec gn = f2.gradient(numeric.x_next);
    CHECK(std::abs(gn.dot(dd)) <= 1e-8 * dd.norm() * gn.norm() + 1e-12);
  }
}

TEST_CASE("line search rejects non-descent directions") {
  Mat a = Mat::Identity(2, 2);
  QuadraticOracle f(a, Vec::Zero(2));
  Vec x(2), d(2);
  x << 1, 0;
  d << -1, 0;  // ascent direction for x - gamma d
  CHECK_THROWS(exact_line_search(f, x, d));
}

TEST_CASE("line search on the example 1 extension steps from x0 to x1") {
  const auto [params, set] = example1();
  ExtensionFunction f(set, params);
  const Vec x0 = set.items[set.index_of("0")].x;
  const Vec x1 = set.items[set.index_of("1")].x;
  const Vec g0 = set.items[set.index_of("0")].g;
  // first search direction, recovered from the step x0 -> x1 through the
  // identity <g0, d0> = ||g0||^2
  const Vec d0 = (g0.squaredNorm() / g0.dot(x0 - x1)) * (x0 - x1);
  const auto r = exact_line_search(f, x0, d0);
  CHECK((r.x_next - x1).norm() < 1e-3);
}

TEST_CASE("triplet set json round trip") {
  const auto [params, set] = example1();
  const std::string text = triplet_set_to_json(set, params);
  const auto back = triplet_set_from_json(text);
  REQUIRE(back.set.size() == set.size());
  for (int i = 0; i < set.size(); ++i) {
    CHECK((back.set.items[i].x - set.items[i].x).norm() == 0.0);
    CHECK((back.set.items[i].g - set.items[i].g).norm() == 0.0);
    CHECK(back.set.items[i].f == set.items[i].f);
    CHECK(back.set.labels[i] == set.labels[i]);
  }
}

TEST_CASE("interpolable sets round-trip through the extension") {
  // Theorem-2 contract on randomly generated interpolable sets.
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 5; ++rep) {
    const ClassParams p(0.2 + 0.1 * rep, 1.0 + 0.2 * rep);
    QuadraticOracle oracle = QuadraticOracle::random(p, 4, 100 + rep);
    std::vector<Vec> pts;
    for (int i = 0; i < 5; ++i) {
      Vec x(4);
      for (int j = 0; j < 4; ++j) x(j) = n01(rng);
      pts.push_back(x);
    }
    const TripletSet s = sample_from_oracle(oracle, pts);
    REQUIRE(is_interpolable(s, p, 1e-10));
    ExtensionFunction f(s, p);
    for (int i = 0; i < s.size(); ++i) {
      CHECK(f.value(s.items[i].x) == Approx(s.items[i].f).margin(1e-6));
      CHECK((f.gradient(s.items[i].x) - s.items[i].g).norm() < 1e-6);
    }
  }
}

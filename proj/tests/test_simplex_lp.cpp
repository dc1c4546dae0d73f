#include "ncgwc/simplex_lp.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ncgwc;
using Catch::Approx;

namespace {

// Brute-force reference for tiny LPs: enumerate candidate vertices as
// intersections of active rows/bounds via random objective-free sampling is
// unreliable; instead enumerate all bases of the standard-form problem.
// For the sizes used here (n + slacks <= 9) this is exact and fast.
struct Brute {
  int n;
  std::vector<double> lo, hi, obj;
  struct Row {
    std::vector<double> a;
    Sense sense;
    double rhs;
  };
  std::vector<Row> rows;

  double best = -1e300;
  std::vector<double> xbest;

  void search(std::vector<double>& x, size_t j) {
    // vertex enumeration by trying each variable at lo/hi plus solving
    // equality subsets is overkill; sample a fine grid instead (n <= 3).
    if (j == x.size()) {
      for (const auto& r : rows) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += r.a[i] * x[i];
        const double slack = r.rhs - v;
        if (r.sense == Sense::LE && slack < -1e-9) return;
        if (r.sense == Sense::GE && slack > 1e-9) return;
        if (r.sense == Sense::EQ && std::abs(slack) > 1e-9) return;
      }
      double v = 0.0;
      for (int i = 0; i < n; ++i) v += obj[i] * x[i];
      if (v > best) {
        best = v;
        xbest = x;
      }
      return;
    }
    const int steps = 60;
    for (int s = 0; s <= steps; ++s) {
      x[j] = lo[j] + (hi[j] - lo[j]) * s / steps;
      search(x, j + 1);
    }
  }
};

}  // namespace

TEST_CASE("lp: simple bounded maximization") {
  LpProblem lp;
  const int x = lp.add_col(0, 10, 1.0);
  const int y = lp.add_col(0, 10, 2.0);
  lp.add_row({{{x, 1.0}, {y, 1.0}}, Sense::LE, 6.0});
  lp.add_row({{{x, 1.0}, {y, -1.0}}, Sense::GE, -4.0});
  const auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  // optimum at x+y=6, y-x=4 -> (1,5), obj 11
  CHECK(sol.obj == Approx(11.0).epsilon(1e-7));
  CHECK(sol.x[0] == Approx(1.0).margin(1e-8));
  CHECK(sol.x[1] == Approx(5.0).margin(1e-8));
}

TEST_CASE("lp: equality rows and negative bounds") {
  LpProblem lp;
  const int x = lp.add_col(-5, 5, 1.0);
  const int y = lp.add_col(-5, 5, -1.0);
  const int z = lp.add_col(-5, 5, 0.5);
  lp.add_row({{{x, 1.0}, {y, 1.0}, {z, 1.0}}, Sense::EQ, 1.0});
  lp.add_row({{{x, 2.0}, {y, -1.0}}, Sense::LE, 3.0});
  const auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  // x <= (3 + y)/2; y should go low (-5), x = -1, z = 1 - x - y = 7 > 5 -> z = 5, x+y = -4
  // maximize x - y + z/2 subject to x+y+z=1...
  Brute b{3, {-5, -5, -5}, {5, 5, 5}, {1, -1, 0.5}, {}};
  b.rows.push_back({{1, 1, 1}, Sense::EQ, 1.0});
  b.rows.push_back({{2, -1, 0}, Sense::LE, 3.0});
  std::vector<double> xx(3);
  b.search(xx, 0);
  CHECK(sol.obj == Approx(b.best).margin(0.02));  // grid resolution
}

TEST_CASE("lp: infeasible detection") {
  LpProblem lp;
  const int x = lp.add_col(0, 1, 1.0);
  lp.add_row({{{x, 1.0}}, Sense::GE, 2.0});
  const auto sol = solve_lp(lp);
  CHECK(sol.status == LpStatus::Infeasible);
}

TEST_CASE("lp: fixed variables and free rows") {
  LpProblem lp;
  const int x = lp.add_col(2, 2, 3.0);  // pinned
  const int y = lp.add_col(0, 4, 1.0);
  lp.add_row({{{x, 1.0}, {y, 1.0}}, Sense::LE, 5.0});
  const auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[0] == Approx(2.0));
  CHECK(sol.obj == Approx(9.0).epsilon(1e-7));
}

TEST_CASE("lp: random problems agree with grid brute force") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int solved = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 2);  // 2..3 vars
    LpProblem lp;
    Brute b;
    b.n = n;
    for (int j = 0; j < n; ++j) {
      const double l = -1.0 - std::abs(u(rng));
      const double h = 1.0 + std::abs(u(rng));
      const double c = u(rng);
      lp.add_col(l, h, c);
      b.lo.push_back(l);
      b.hi.push_back(h);
      b.obj.push_back(c);
    }
    const int m = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < m; ++i) {
      LpRow row;
      Brute::Row br;
      br.a.resize(n);
      for (int j = 0; j < n; ++j) {
        const double c = u(rng);
        row.terms.push_back({j, c});
        br.a[j] = c;
      }
      const int s = static_cast<int>(rng() % 3);
      row.sense = s == 0 ? Sense::LE : (s == 1 ? Sense::GE : Sense::EQ);
      br.sense = row.sense;
      // anchor the rhs at a random interior point so EQ rows stay feasible
      std::vector<double> anchor(n);
      double rhs = 0.0;
      for (int j = 0; j < n; ++j) {
        anchor[j] = b.lo[j] + (b.hi[j] - b.lo[j]) * 0.5 * (1.0 + 0.8 * u(rng));
        rhs += br.a[j] * anchor[j];
      }
      row.rhs = rhs;
      br.rhs = rhs;
      lp.add_row(row);
      b.rows.push_back(br);
    }
    const auto sol = solve_lp(lp);
    std::vector<double> xx(n);
    b.best = -1e300;
    b.search(xx, 0);
    if (b.best < -1e200) {
      // grid found nothing feasible (thin equality slice); skip comparison
      continue;
    }
    REQUIRE(sol.status == LpStatus::Optimal);
    // brute grid underestimates the optimum; simplex must be >= and close
    CHECK(sol.obj >= b.best - 1e-7);
    CHECK(sol.obj <= b.best + 0.4);
    ++solved;
  }
  CHECK(solved >= 15);
}

TEST_CASE("lp: degenerate and redundant rows") {
  LpProblem lp;
  const int x = lp.add_col(0, 1, 1.0);
  const int y = lp.add_col(0, 1, 1.0);
  lp.add_row({{{x, 1.0}, {y, 1.0}}, Sense::LE, 1.0});
  lp.add_row({{{x, 1.0}, {y, 1.0}}, Sense::LE, 1.0});  // duplicate
  lp.add_row({{{x, 1.0}, {y, 1.0}}, Sense::GE, 1.0});  // forces equality
  lp.add_row({{{x, 2.0}, {y, 2.0}}, Sense::EQ, 2.0});  // scaled duplicate
  const auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.obj == Approx(1.0).epsilon(1e-7));
}

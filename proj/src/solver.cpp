#include "ncgwc/solver.hpp"

#include "ncgwc/oracle.hpp"
#include "ncgwc/relaxation.hpp"
#include "ncgwc/runner.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>
#include <cmath>
#include <queue>
#include <random>
#include <set>

namespace ncgwc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Mat square_factor(const Mat& gram) {
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  const Vec lam = es.eigenvalues().cwiseMax(0.0);
  return lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

void fill_gram(const QcqpProblem& p, const Mat& gram, Point& x) {
  const int dim = p.gram.dim;
  for (int a = 0; a < dim; ++a)
    for (int b = a; b < dim; ++b) x[p.gram.g[a][b]] = gram(a, b);
  if (!p.gram.h.empty()) {
    const Mat h = square_factor(gram);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) x[p.gram.h[r * dim + c]] = h(r, c);
  }
}

VarId find_var(const QcqpProblem& p, const std::string& name) {
  for (int i = 0; i < p.num_vars(); ++i)
    if (p.vars[i].name == name) return i;
  return -1;
}

std::optional<Point> stage1_direction(const QcqpProblem& p, uint64_t seed) {
  const ClassParams cp(p.meta.mu, p.meta.L);
  const double c = *p.meta.c;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  const int n = 6;
  for (int attempt = 0; attempt < 32; ++attempt) {
    QuadraticOracle f = QuadraticOracle::random(cp, n, rng());
    Vec x1(n), pr(n);
    for (int i = 0; i < n; ++i) {
      x1(i) = n01(rng);
      pr(i) = n01(rng);
    }
    Vec g1 = f.gradient(x1);
    if (g1.norm() < 1e-8) continue;
    Vec perp = pr - pr.dot(g1) / g1.squaredNorm() * g1;
    if (perp.norm() < 1e-10) continue;
    perp.normalize();
    const Vec d1 = g1 + std::sqrt(std::max(0.0, c - 1.0)) * g1.norm() * perp;
    const double den = d1.dot(f.matrix() * d1);
    if (den <= 1e-14) continue;
    const double gamma = g1.dot(d1) / den;
    const Vec xk = x1 - gamma * d1;
    const Vec gk = f.gradient(xk);
    if (gk.norm() < 1e-8 * g1.norm()) continue;
    const double beta = beta_update(gk, g1, p.meta.eta);

    const double t = 1.0 / gk.norm();
    Mat h_true(n, 4);
    h_true.col(0).setZero();  // the x column is pinned by shift invariance
    h_true.col(1) = t * g1;
    h_true.col(2) = t * gk;
    h_true.col(3) = t * d1;
    const Mat gram = h_true.transpose() * h_true;

    Point x(p.num_vars(), 0.0);
    fill_gram(p, gram, x);
    x[find_var(p, "f_km1")] = t * t * f.value(x1);
    x[find_var(p, "f_k")] = t * t * f.value(xk);
    x[find_var(p, "beta")] = beta;
    x[find_var(p, "gamma")] = gamma;
    complete_defined_vars(p, x);
    if (p.max_violation(x) <= 1e-8) return x;
  }
  return std::nullopt;
}

std::optional<Point> stage1_upper(const QcqpProblem& p, uint64_t seed) {
  const ClassParams cp(p.meta.mu, p.meta.L);
  const bool exact = p.meta.family == Family::ExactUpper;
  const int n_steps = p.meta.N;
  const int dim = p.gram.dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (int attempt = 0; attempt < 32; ++attempt) {
    QuadraticOracle f = QuadraticOracle::random(cp, dim, rng());
    Vec x0(dim);
    for (int i = 0; i < dim; ++i) x0(i) = n01(rng);
    const Vec g0 = f.gradient(x0);
    if (g0.norm() < 1e-8) continue;

    MethodConfig cfg;
    cfg.rule = p.meta.eta == 1.0 ? UpdateRule::PRP : UpdateRule::FR;
    cfg.max_iters = n_steps;
    if (!exact) {
      const double c = *p.meta.c;
      // alternate between a budget-tight start and an interior one
      const double cc = (attempt % 2 == 0) ? c : 1.0 + (c - 1.0) * 0.5;
      Vec pr(dim);
      for (int i = 0; i < dim; ++i) pr(i) = n01(rng);
      Vec perp = pr - pr.dot(g0) / g0.squaredNorm() * g0;
      if (perp.norm() < 1e-10) continue;
      perp.normalize();
      cfg.d0 = g0 + std::sqrt(std::max(0.0, cc - 1.0)) * g0.norm() * perp;
    }
    RunTrace tr;
    try {
      tr = run_method(f, x0, cfg, 1e-13);
    } catch (const std::exception&) {
      continue;
    }
    if (tr.iterates() != n_steps + 1) continue;
    const double f0 = tr.f[0];
    if (f0 <= 1e-12) continue;
    const double t = 1.0 / std::sqrt(f0);

    Mat h_true = Mat::Zero(dim, dim);
    if (!exact) h_true.col(0) = t * tr.d[0];
    for (int i = 0; i <= n_steps; ++i) {
      h_true.col(1 + i) = t * tr.g[i];
      h_true.col(n_steps + 2 + i) = t * tr.x[i];
    }
    const Mat gram = h_true.transpose() * h_true;
    Point x(p.num_vars(), 0.0);
    fill_gram(p, gram, x);
    for (int i = 0; i <= n_steps; ++i) x[find_var(p, "f_" + std::to_string(i))] = t * t * tr.f[i];
    // beta and chi
    std::map<std::pair<int, int>, double> chiv;
    for (int i = 1; i <= n_steps - 1; ++i) {
      const double b = tr.beta[i - 1];
      VarId bv = find_var(p, "beta_" + std::to_string(i - 1));
      if (bv >= 0) x[bv] = b;
      chiv[{i - 1, i}] = b;
      for (int j = 0; j <= i - 2; ++j) chiv[{j, i}] = chiv[{j, i - 1}] * b;
      for (int j = 0; j <= i - 1; ++j) {
        VarId cv = find_var(p, "chi_" + std::to_string(j) + "_" + std::to_string(i));
        if (cv >= 0) x[cv] = chiv[{j, i}];
      }
    }
    complete_defined_vars(p, x);
    if (p.max_violation(x) <= 1e-8) return x;
  }
  return std::nullopt;
}

std::optional<Point> stage1_lower(const QcqpProblem& p, uint64_t seed) {
  const ClassParams cp(p.meta.mu, p.meta.L);
  const bool exact = !p.meta.c.has_value();
  const int n_steps = p.meta.N;
  const int dim = p.gram.dim;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  for (int attempt = 0; attempt < 16; ++attempt) {
    QuadraticOracle f = QuadraticOracle::random(cp, dim, rng());
    Vec x0(dim);
    for (int i = 0; i < dim; ++i) x0(i) = n01(rng);
    const Vec g0 = f.gradient(x0);
    if (g0.norm() < 1e-8) continue;
    MethodConfig cfg;
    cfg.rule = UpdateRule::FixedBetas;
    cfg.fixed_betas = p.meta.fixed_betas;
    cfg.fixed_betas.resize(std::max<size_t>(cfg.fixed_betas.size(), n_steps), 0.0);
    cfg.max_iters = n_steps;
    if (!exact) {
      const double c = *p.meta.c;
      Vec pr(dim);
      for (int i = 0; i < dim; ++i) pr(i) = n01(rng);
      Vec perp = pr - pr.dot(g0) / g0.squaredNorm() * g0;
      if (perp.norm() < 1e-10) continue;
      perp.normalize();
      cfg.d0 = g0 + std::sqrt(std::max(0.0, c - 1.0)) * g0.norm() * perp;
    }
    RunTrace tr;
    try {
      tr = run_method(f, x0, cfg, 1e-13);
    } catch (const std::exception&) {
      continue;
    }
    if (tr.iterates() != n_steps + 1) continue;
    const double f0 = tr.f[0];
    if (f0 <= 1e-12) continue;
    const double t = 1.0 / std::sqrt(f0);

    Mat h_true = Mat::Zero(dim, dim);
    h_true.col(0) = t * tr.x[0];
    for (int i = 0; i <= n_steps; ++i) h_true.col(1 + i) = t * tr.g[i];
    if (!exact) h_true.col(n_steps + 2) = t * tr.d[0];
    const Mat gram = h_true.transpose() * h_true;
    Point x(p.num_vars(), 0.0);
    fill_gram(p, gram, x);
    for (int i = 0; i <= n_steps; ++i) x[find_var(p, "f_" + std::to_string(i))] = t * t * tr.f[i];
    // gammas and alphas
    std::map<std::pair<int, int>, double> chiv;
    for (int i = 1; i <= n_steps - 1; ++i) {
      chiv[{i - 1, i}] = p.meta.fixed_betas[i - 1];
      for (int j = 0; j <= i - 2; ++j) chiv[{j, i}] = chiv[{j, i - 1}] * p.meta.fixed_betas[i - 1];
    }
    for (int i = 0; i < n_steps; ++i) x[find_var(p, "gamma_" + std::to_string(i))] = tr.gamma[i];
    for (int i = 1; i <= n_steps; ++i) {
      for (int j = 0; j <= i - 1; ++j) {
        double a = (j == i - 1) ? tr.gamma[i - 1] : tr.gamma[j];
        if (j < i - 1) {
          for (int l = j + 1; l <= i - 1; ++l) a += tr.gamma[l] * chiv[{j, l}];
        }
        VarId av = find_var(p, "alpha_" + std::to_string(i) + "_" + std::to_string(j));
        if (av >= 0) x[av] = a;
      }
    }
    complete_defined_vars(p, x);
    // the frozen update-parameter rows are violated by a natural replay;
    // restore feasibility before handing the point back
    AlOptions restore;
    restore.obj_weight = 0.0;
    restore.max_outer = 60;
    const AlResult r = improve_local(p, x, restore);
    if (r.viol <= 1e-8) return r.z;
  }
  return std::nullopt;
}

}  // namespace

void complete_defined_vars(const QcqpProblem& p, Point& x) {
  x.resize(p.num_vars(), 0.0);
  for (const auto& [v, e] : p.defined) x[v] = e.eval(x);
}

std::optional<std::pair<Vec, double>> separate_psd_cut(const Mat& g, double tol) {
  if (g.rows() != g.cols()) throw std::invalid_argument("separate_psd_cut: non-square");
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (g + g.transpose()));
  const double lam = es.eigenvalues()(0);
  if (lam >= -tol) return std::nullopt;
  Vec u = es.eigenvectors().col(0);
  u.normalize();
  return std::make_pair(u, lam);
}

Point stage1_feasible(const QcqpProblem& p, uint64_t seed) {
  std::optional<Point> x;
  switch (p.meta.family) {
    case Family::Direction:
      x = stage1_direction(p, seed);
      break;
    case Family::LyapunovUpper:
    case Family::ExactUpper:
      x = stage1_upper(p, seed);
      break;
    case Family::LowerFixedBeta:
      x = stage1_lower(p, seed);
      break;
  }
  if (!x) throw std::runtime_error("stage1_feasible: no feasible construction after retries");
  return *x;
}

Point stage2_local(const QcqpProblem& p, const Point& incumbent, const AlOptions& opts) {
  const AlResult r = improve_local(p, incumbent, opts);
  return r.feasible ? r.z : incumbent;
}

// ---------------------------------------------------------------------------
// stage 3: spatial branch-and-bound

namespace {

struct BbNode {
  double bound;
  long id;
  long parent;
  int branch_var;
  double blo, bhi;
  int depth;
};

struct HeapEntry {
  double bound;
  long id;
  bool operator<(const HeapEntry& o) const {
    if (bound != o.bound) return bound < o.bound;  // max-heap on bound
    return id > o.id;                              // then min id
  }
};

struct BbContext {
  const QcqpProblem& p;
  const SolveOptions& opts;
  Lifting lift;
  CutPool pool;
  std::vector<double> root_lo, root_hi, root_span;
  std::vector<BbNode> arena;
  std::priority_queue<HeapEntry> heap;
  double incumbent_value = -1e300;
  Point incumbent;
  bool have_incumbent = false;
  double pruned_bound_max = -1e300;
  long cuts_added = 0;
  bool sound = true;
  LpWarmStart node_warm;
  std::vector<VarId> shortlist_cache;

  const std::vector<VarId>& shortlist() {
    if (shortlist_cache.empty()) shortlist_cache = obbt_shortlist();
    return shortlist_cache;
  }

  explicit BbContext(const QcqpProblem& prob, const SolveOptions& o) : p(prob), opts(o), lift(prob) {}

  double threshold() const {
    return incumbent_value + opts.tol_rel * std::max(std::abs(incumbent_value), 1e-12);
  }

  void build_box(long node_id, std::vector<double>& lo, std::vector<double>& hi) const {
    lo = root_lo;
    hi = root_hi;
    long cur = node_id;
    while (cur >= 0) {
      const BbNode& n = arena[cur];
      if (n.branch_var >= 0) {
        lo[n.branch_var] = std::max(lo[n.branch_var], n.blo);
        hi[n.branch_var] = std::min(hi[n.branch_var], n.bhi);
      }
      cur = n.parent;
    }
  }

  void init_cut_pool() {
    const int dim = p.gram.dim;
    // deterministic pair vectors catch the 2x2 minors
    for (int a = 0; a < dim; ++a) {
      for (int b = a + 1; b < dim; ++b) {
        for (double s : {1.0, -1.0}) {
          Vec y = Vec::Zero(dim);
          y(a) = M_SQRT1_2;
          y(b) = s * M_SQRT1_2;
          pool.vectors.push_back(y);
        }
      }
    }
    std::mt19937_64 rng(opts.seed * 9176 + 13);
    std::normal_distribution<double> n01;
    for (int k = 0; k < opts.init_random_cuts; ++k) {
      Vec y(dim);
      for (int i = 0; i < dim; ++i) y(i) = n01(rng);
      const double norm = y.norm();
      if (norm > 1e-12) pool.vectors.push_back(y / norm);
    }
  }

  struct NodeResult {
    bool feasible = false;
    double bound = -1e300;
    std::vector<double> x;
    double lambda_min = 0.0;
    bool lp_ok = false;
  };

  NodeResult solve_node(const std::vector<double>& lo, const std::vector<double>& hi,
                        int cut_rounds) {
    NodeResult res;
    double prev_bound = 1e300;
    int tail = 0;
    for (int round = 0; round < cut_rounds; ++round) {
      const LpProblem lp = lift.assemble(lo, hi, pool);
      const LpSolution sol = solve_lp(lp, {}, &node_warm);
      if (sol.status == LpStatus::Infeasible) {
#ifdef NCGWC_DUMP_INFEASIBLE
        static int dump_id = 0;
        {
          nlohmann::json d;
          d["n"] = lp.n;
          d["lo"] = lp.lo;
          d["hi"] = lp.hi;
          d["obj"] = lp.obj;
          nlohmann::json rows = nlohmann::json::array();
          for (const auto& r : lp.rows) {
            nlohmann::json rr;
            rr["rhs"] = r.rhs;
            rr["sense"] = static_cast<int>(r.sense);
            nlohmann::json ts = nlohmann::json::array();
            for (const auto& [jj, cc] : r.terms) ts.push_back({jj, cc});
            rr["terms"] = ts;
            rows.push_back(rr);
          }
          d["rows"] = rows;
          std::ofstream f("/tmp/infeas_" + std::to_string(dump_id++) + ".json");
          f << d.dump();
        }
#endif
        return res;  // pruned
      }
      if (sol.status != LpStatus::Optimal) {
        // the dual bound is still valid even when the basis degraded
        res.feasible = true;
        res.lp_ok = false;
        res.bound = sol.obj + lift.objective_constant();
        res.bound += 1e-8 * (1.0 + std::abs(res.bound));
        return res;
      }
      res.feasible = true;
      res.lp_ok = true;
      res.x = sol.x;
      res.bound = sol.obj + lift.objective_constant();
      res.bound += 1e-8 * (1.0 + std::abs(res.bound));

      Mat g(p.gram.dim, p.gram.dim);
      for (int a = 0; a < p.gram.dim; ++a)
        for (int b = 0; b < p.gram.dim; ++b) g(a, b) = sol.x[p.gram.g[std::min(a, b)][std::max(a, b)]];
      Eigen::SelfAdjointEigenSolver<Mat> es(g);
      res.lambda_min = es.eigenvalues()(0);
      if (res.lambda_min >= -1e-6) return res;
      int added = 0;
      for (int k = 0; k < p.gram.dim && added < 3; ++k) {
        if (es.eigenvalues()(k) < -1e-6) {
          pool.vectors.push_back(es.eigenvectors().col(k).normalized());
          ++cuts_added;
          ++added;
        }
      }
      if (std::abs(prev_bound - res.bound) <= 1e-10 * (1.0 + std::abs(res.bound))) {
        if (++tail >= 2) return res;
      } else {
        tail = 0;
      }
      prev_bound = res.bound;
    }
    return res;
  }

  // try to turn an LP point into a feasible incumbent via factorization + AL
  void try_promote(const std::vector<double>& x_lp, double node_bound) {
    Point cand(x_lp.begin(), x_lp.begin() + p.num_vars());
    p.clip(cand);
    Mat g(p.gram.dim, p.gram.dim);
    for (int a = 0; a < p.gram.dim; ++a)
      for (int b = 0; b < p.gram.dim; ++b) g(a, b) = cand[p.gram.g[std::min(a, b)][std::max(a, b)]];
    fill_gram(p, 0.5 * (g + g.transpose()), cand);
    complete_defined_vars(p, cand);
    AlOptions al;
    al.max_outer = 25;
    al.max_inner = 300;
    const AlResult r = improve_local(p, cand, al);
    if (r.feasible && r.obj > incumbent_value) {
      update_incumbent(r.z, r.obj, node_bound);
    }
  }

  void update_incumbent(const Point& z, double value, double current_upper) {
    if (value > current_upper + 1e-9 * (1.0 + std::abs(value))) sound = false;
    incumbent = z;
    incumbent_value = value;
    have_incumbent = true;
  }

  // scalars and Gram diagonals drive the envelopes; off-diagonals follow
  std::vector<VarId> obbt_shortlist() const {
    std::set<VarId> gram_all;
    std::set<VarId> diag;
    for (int a = 0; a < p.gram.dim; ++a) {
      diag.insert(p.gram.g[a][a]);
      for (int b = a; b < p.gram.dim; ++b) gram_all.insert(p.gram.g[a][b]);
    }
    std::vector<VarId> out;
    std::set<VarId> seen;
    auto push = [&](VarId v) {
      if (seen.insert(v).second) out.push_back(v);
    };
    for (const auto& [u, v] : lift.products()) {
      for (VarId t : {u, v}) {
        if (!gram_all.count(t) || diag.count(t)) push(t);
      }
    }
    // Gram entries appearing in objective products
    for (const auto& [k, coef] : p.objective.quad) {
      for (VarId t : {k.first, k.second})
        if (gram_all.count(t)) push(t);
    }
    return out;
  }

  std::vector<VarId> obbt_all_targets() const {
    std::vector<VarId> targets;
    std::set<VarId> seen;
    for (const auto& [u, v] : lift.products()) {
      for (VarId t : {u, v})
        if (seen.insert(t).second) targets.push_back(t);
    }
    return targets;
  }

  // optimization-based bound tightening over the given variables; the LPs
  // in a batch share rows, so the previous optimal basis warm-starts the next
  void obbt(std::vector<double>& lo, std::vector<double>& hi, int rounds,
            const std::vector<VarId>& targets) {
    LpWarmStart warm;
    for (int round = 0; round < rounds; ++round) {
      for (VarId j : targets) {
        if (hi[j] - lo[j] < 1e-9) continue;
        for (int dir = 0; dir < 2; ++dir) {
          LpProblem lp = lift.assemble(lo, hi, pool);
          if (have_incumbent) lp.add_row(lift.objective_cut_row(incumbent_value));
          std::fill(lp.obj.begin(), lp.obj.end(), 0.0);
          lp.obj[j] = dir == 0 ? 1.0 : -1.0;
          const LpSolution sol = solve_lp(lp, {}, &warm);
          if (sol.status == LpStatus::Infeasible) continue;  // node loop prunes later
          // the returned value is a certified bound for any non-infeasible
          // status; keep an outward slack to limit induced degeneracy
          const double span = hi[j] - lo[j];
          const double eps = 1e-7 * (1.0 + std::abs(sol.obj)) + 1e-6 * span;
          if (dir == 0) {
            const double cand = sol.obj + eps;
            if (cand < hi[j] - 0.01 * span) hi[j] = std::max(lo[j], cand);
          } else {
            const double cand = -sol.obj - eps;
            if (cand > lo[j] + 0.01 * span) lo[j] = std::min(hi[j], cand);
          }
        }
      }
    }
  }
};

}  // namespace

SolveReport stage3_global(const QcqpProblem& p, const Point& incumbent, const SolveOptions& opts) {
  const auto t0 = Clock::now();
  BbContext ctx(p, opts);
  ctx.root_lo.resize(p.num_vars());
  ctx.root_hi.resize(p.num_vars());
  for (int i = 0; i < p.num_vars(); ++i) {
    ctx.root_lo[i] = p.vars[i].lo;
    ctx.root_hi[i] = p.vars[i].hi;
  }
  ctx.init_cut_pool();

  if (!incumbent.empty() && p.max_violation(incumbent) <= 1e-6) {
    Point z = incumbent;
    z.resize(p.num_vars(), 0.0);
    ctx.incumbent = z;
    ctx.incumbent_value = p.objective.eval(z);
    ctx.have_incumbent = true;
  }

  SolveReport rep;
  // root processing: cuts, then OBBT, then cuts again
  auto root = ctx.solve_node(ctx.root_lo, ctx.root_hi, opts.cut_rounds_root);
  if (opts.obbt && root.feasible && root.lp_ok) {
    ctx.obbt(ctx.root_lo, ctx.root_hi, 1, ctx.obbt_all_targets());
    if (opts.obbt_rounds > 1) {
      ctx.obbt(ctx.root_lo, ctx.root_hi, opts.obbt_rounds - 1, ctx.shortlist());
    }
    root = ctx.solve_node(ctx.root_lo, ctx.root_hi, opts.cut_rounds_root / 2);
  }
  ctx.root_span.resize(p.num_vars());
  for (int i = 0; i < p.num_vars(); ++i) {
    ctx.root_span[i] = std::max(1e-12, ctx.root_hi[i] - ctx.root_lo[i]);
  }

  if (!root.feasible) {
    if (ctx.have_incumbent) {
      // a feasible incumbent with an infeasible relaxation is a modeling error
      throw std::runtime_error("stage3_global: infeasible root relaxation");
    }
    rep.termination = "infeasible";
    rep.upper_bound = -1e300;
    rep.wall_time_s = seconds_since(t0);
    return rep;
  }

  ctx.arena.push_back({root.bound, 0, -1, -1, 0.0, 0.0, 0});
  ctx.heap.push({root.bound, 0});
  long processed = 0;
  std::string termination = "exhausted";

  std::vector<double> lo, hi;
  while (!ctx.heap.empty()) {
    if (processed >= opts.max_nodes) {
      termination = "nodes";
      break;
    }
    if (seconds_since(t0) > opts.time_limit_s) {
      termination = "time";
      break;
    }
    const HeapEntry top = ctx.heap.top();
    if (ctx.have_incumbent && top.bound <= ctx.threshold()) {
      ctx.pruned_bound_max = std::max(ctx.pruned_bound_max, top.bound);
      termination = "gap";
      break;
    }
    ctx.heap.pop();
    ++processed;
    ctx.build_box(top.id, lo, hi);

    const bool do_obbt = opts.obbt && opts.node_obbt_interval > 0 &&
                         processed % opts.node_obbt_interval == 0 && processed > 1;
    if (do_obbt) ctx.obbt(lo, hi, 1, ctx.shortlist());

    auto res = ctx.solve_node(lo, hi, opts.cut_rounds_node);
    if (opts.verbose) {
      std::fprintf(stderr, "node %ld depth %d parent_bound %.6f -> feas=%d lp_ok=%d bound=%.6f inc=%.6f heap=%zu\n",
                   top.id, ctx.arena[top.id].depth, top.bound, (int)res.feasible, (int)res.lp_ok,
                   res.bound, ctx.incumbent_value, ctx.heap.size());
    }
    if (!res.feasible) continue;  // pruned by infeasibility
    double bound = std::min(res.bound, top.bound);
    if (ctx.have_incumbent && bound <= ctx.threshold()) {
      ctx.pruned_bound_max = std::max(ctx.pruned_bound_max, bound);
      continue;
    }
    if (!res.lp_ok) {
      // numerical trouble: keep the parent bound, branch on the relatively
      // widest product variable
      int var = -1;
      double widest = -1.0;
      for (const auto& [u, v] : ctx.lift.products()) {
        for (VarId t : {u, v}) {
          const double rel = (hi[t] - lo[t]) / ctx.root_span[t];
          if (rel > widest) {
            widest = rel;
            var = t;
          }
        }
      }
      if (var < 0 || widest < 1e-9) {
        ctx.pruned_bound_max = std::max(ctx.pruned_bound_max, bound);
        continue;
      }
      const double mid = 0.5 * (lo[var] + hi[var]);
      const long id0 = static_cast<long>(ctx.arena.size());
      ctx.arena.push_back({bound, id0, top.id, var, lo[var], mid, ctx.arena[top.id].depth + 1});
      ctx.heap.push({bound, id0});
      const long id1 = static_cast<long>(ctx.arena.size());
      ctx.arena.push_back({bound, id1, top.id, var, mid, hi[var], ctx.arena[top.id].depth + 1});
      ctx.heap.push({bound, id1});
      continue;
    }

    // incumbent attempts
    int kmax = -1;
    double vmax = 0.0;
    for (int k = 0; k < ctx.lift.n_prod(); ++k) {
      const double v = ctx.lift.product_violation(res.x, k);
      if (v > vmax) {
        vmax = v;
        kmax = k;
      }
    }
    const double upper_now = std::max({ctx.pruned_bound_max, bound,
                                       ctx.heap.empty() ? -1e300 : ctx.heap.top().bound});
    if (vmax <= 1e-7 && res.lambda_min >= -1e-6) {
      ctx.try_promote(res.x, upper_now);
      ctx.pruned_bound_max = std::max(ctx.pruned_bound_max, bound);
      continue;  // the relaxation is exact here; the node is resolved
    }
    // early nodes carry the most informative relaxation points
    if (processed <= 8 ||
        (opts.polish_interval > 0 && processed % opts.polish_interval == 0)) {
      ctx.try_promote(res.x, upper_now);
      if (ctx.have_incumbent && bound <= ctx.threshold()) {
        ctx.pruned_bound_max = std::max(ctx.pruned_bound_max, bound);
        continue;
      }
    }

    // branch on the most violated product, splitting the relatively wider leg
    const auto [u, v] = ctx.lift.products()[kmax];
    VarId var = u;
    if (u != v) {
      const double ru = (hi[u] - lo[u]) / ctx.root_span[u];
      const double rv = (hi[v] - lo[v]) / ctx.root_span[v];
      var = ru >= rv ? u : v;
    }
    const double span = hi[var] - lo[var];
    if (span < 1e-11) {
      ctx.pruned_bound_max = std::max(ctx.pruned_bound_max, bound);
      continue;  // stuck: the bound stays certified
    }
    const double pt =
        std::clamp(res.x[var], lo[var] + 0.1 * span, hi[var] - 0.1 * span);
    const int depth = ctx.arena[top.id].depth + 1;
    const long id0 = static_cast<long>(ctx.arena.size());
    ctx.arena.push_back({bound, id0, top.id, var, lo[var], pt, depth});
    ctx.heap.push({bound, id0});
    const long id1 = static_cast<long>(ctx.arena.size());
    ctx.arena.push_back({bound, id1, top.id, var, pt, hi[var], depth});
    ctx.heap.push({bound, id1});
  }

  double upper = ctx.pruned_bound_max;
  if (!ctx.heap.empty()) upper = std::max(upper, ctx.heap.top().bound);
  if (ctx.have_incumbent) upper = std::max(upper, ctx.incumbent_value);
  if (upper <= -1e299) upper = root.bound;

  rep.upper_bound = upper;
  rep.incumbent_value = ctx.have_incumbent ? ctx.incumbent_value : -1e300;
  rep.incumbent = ctx.incumbent;
  rep.rel_gap = (upper - rep.incumbent_value) / std::max(std::abs(upper), 1e-12);
  rep.nodes = processed;
  rep.cuts = ctx.cuts_added;
  rep.termination = ctx.have_incumbent ? termination : "no-incumbent:" + termination;
  rep.sound = ctx.sound;
  rep.wall_time_s = seconds_since(t0);
  return rep;
}

namespace {

// if the incumbent pins a heuristic box, widen it (and every box derived
// from the Gram diagonal) and report that a re-solve is needed
bool widen_heuristic_boxes(QcqpProblem& p, const Point& inc) {
  bool widened = false;
  for (int i = 0; i < p.num_vars(); ++i) {
    const VarInfo& v = p.vars[i];
    if (!v.heuristic) continue;
    const double span = std::max(1e-12, v.hi - v.lo);
    const double d = std::min(inc[i] - v.lo, v.hi - inc[i]);
    if (d <= 1e-7 * span) {
      p.vars[i].lo -= (inc[i] - v.lo <= 1e-7 * span) ? span : 0.0;
      p.vars[i].hi += (v.hi - inc[i] <= 1e-7 * span) ? span : 0.0;
      widened = true;
    }
  }
  if (!widened) return false;
  // re-derive the off-diagonal and factor boxes from the diagonal ones
  const GramLayout& g = p.gram;
  for (int a = 0; a < g.dim; ++a) {
    for (int b = a + 1; b < g.dim; ++b) {
      const double cs = std::sqrt(p.vars[g.g[a][a]].hi * p.vars[g.g[b][b]].hi);
      VarInfo& v = p.vars[g.g[a][b]];
      if (v.hi > 0.0 || v.lo < 0.0) {
        v.lo = std::min(v.lo, -cs);
        v.hi = std::max(v.hi, cs);
      }
    }
  }
  for (int r = 0; r < g.dim && !g.h.empty(); ++r) {
    for (int c = 0; c < g.dim; ++c) {
      VarInfo& v = p.vars[g.h[r * g.dim + c]];
      const double bound = std::sqrt(p.vars[g.g[c][c]].hi) + 1e-12;
      if (v.hi > 0.0) {
        v.lo = std::min(v.lo, -bound);
        v.hi = std::max(v.hi, bound);
      }
    }
  }
  return true;
}

}  // namespace

namespace {

// diversified start: random Gram factor within the boxes, then feasibility
// restoration
std::optional<Point> random_restored_start(const QcqpProblem& p, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Point x(p.num_vars(), 0.0);
  for (int i = 0; i < p.num_vars(); ++i) {
    const VarInfo& v = p.vars[i];
    const double mid = 0.5 * (v.lo + v.hi);
    const double span = v.hi - v.lo;
    x[i] = std::clamp(mid + 0.2 * span * n01(rng), v.lo, v.hi);
  }
  if (!p.gram.h.empty()) {
    const int dim = p.gram.dim;
    Mat h(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        const VarInfo& v = p.vars[p.gram.h[r * dim + c]];
        h(r, c) = 0.4 * v.hi * n01(rng);
      }
    Mat g = h.transpose() * h;
    for (int a = 0; a < dim; ++a)
      for (int b = a; b < dim; ++b) x[p.gram.g[a][b]] = g(a, b);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) x[p.gram.h[r * dim + c]] = h(r, c);
  }
  complete_defined_vars(p, x);
  p.clip(x);
  AlOptions restore;
  restore.obj_weight = 0.0;
  restore.max_outer = 40;
  const AlResult r = improve_local(p, x, restore);
  if (r.viol > 1e-8) return std::nullopt;
  return r.z;
}

}  // namespace

SolveReport solve_pep(const QcqpProblem& problem, const SolveOptions& opts) {
  QcqpProblem p = problem;
  SolveReport rep;
  for (int round = 0; round < 4; ++round) {
    // stages 1-2: multi-start incumbent search over method-run seeds and
    // random restored points
    Point best;
    double best_val = -1e300;
    bool have = false;
    std::vector<Point> starts;
    if (opts.warm_start) starts.push_back(*opts.warm_start);
    for (int s = 0; s < opts.stage2_starts; ++s) {
      try {
        starts.push_back(stage1_feasible(p, opts.seed + 1000 * s + round));
      } catch (const std::exception&) {
        // keep going; other seeds may work
      }
      if (auto r = random_restored_start(p, opts.seed + 777 * s + round)) {
        starts.push_back(*r);
      }
    }
    for (const Point& st : starts) {
      const AlResult r = improve_local(p, st, {});
      if (r.feasible && r.obj > best_val) {
        best = r.z;
        best_val = r.obj;
        have = true;
      }
    }
    // basin hops around the best point found
    if (have) {
      std::mt19937_64 rng(opts.seed * 31 + 7);
      std::normal_distribution<double> n01;
      for (int hop = 0; hop < 4; ++hop) {
        Point pert = best;
        for (int i = 0; i < p.num_vars(); ++i) {
          const double span = p.vars[i].hi - p.vars[i].lo;
          pert[i] += 0.05 * span * n01(rng);
        }
        p.clip(pert);
        const AlResult r = improve_local(p, pert, {});
        if (r.feasible && r.obj > best_val) {
          best = r.z;
          best_val = r.obj;
        }
      }
    }
    rep = stage3_global(p, have ? best : Point{}, opts);
    if (rep.incumbent.empty() || !widen_heuristic_boxes(p, rep.incumbent)) break;
  }
  return rep;
}

Point warm_lower_from_upper(const QcqpProblem& lower, const QcqpProblem& upper,
                            const Point& upper_point) {
  const int n = lower.meta.N;
  if (upper.meta.N != n) throw std::invalid_argument("warm_lower_from_upper: N mismatch");
  const bool exact = !lower.meta.c.has_value();
  const int dim_lo = lower.gram.dim;   // n + 3
  const int dim_up = upper.gram.dim;   // 2n + 3

  // column map: lower [x_k | g_0..g_N | d] -> upper indices
  std::vector<int> map(dim_lo);
  map[0] = n + 2;
  for (int i = 0; i <= n; ++i) map[1 + i] = 1 + i;
  map[n + 2] = 0;

  const Mat g_up = upper.gram_value(upper_point);
  Mat g_lo(dim_lo, dim_lo);
  for (int a = 0; a < dim_lo; ++a)
    for (int b = 0; b < dim_lo; ++b) g_lo(a, b) = g_up(map[a], map[b]);
  if (exact) {
    // the direction column is pinned; d_0 = g_0 lives in the g_0 column
    for (int a = 0; a < dim_lo; ++a) g_lo(a, n + 2) = g_lo(n + 2, a) = 0.0;
  }

  Point x(lower.num_vars(), 0.0);
  fill_gram(lower, g_lo, x);
  for (int i = 0; i <= n; ++i) {
    const VarId fl = find_var(lower, "f_" + std::to_string(i));
    const VarId fu = find_var(upper, "f_" + std::to_string(i));
    if (fl >= 0 && fu >= 0) x[fl] = upper_point[fu];
  }

  // recover step sizes by projecting the recorded displacement onto the
  // frozen-direction span, all inside the upper Gram
  std::map<std::pair<int, int>, double> chiv;
  for (int i = 1; i <= n - 1; ++i) {
    chiv[{i - 1, i}] = lower.meta.fixed_betas[i - 1];
    for (int j = 0; j <= i - 2; ++j) chiv[{j, i}] = chiv[{j, i - 1}] * lower.meta.fixed_betas[i - 1];
  }
  auto dir_coeffs = [&](int i) {
    // d_i in upper coordinates
    Vec d = Vec::Zero(dim_up);
    if (i == 0) {
      if (exact) {
        d(1) = 1.0;
      } else {
        d(0) = 1.0;
      }
      return d;
    }
    d(1 + i) = 1.0;
    for (int j = 1; j <= i - 1; ++j) d(1 + j) = chiv[{j, i}];
    if (exact) {
      d(1) += chiv[{0, i}];
    } else {
      d(0) = chiv[{0, i}];
    }
    return d;
  };
  for (int i = 0; i < n; ++i) {
    const Vec d = dir_coeffs(i);
    Vec dx = Vec::Zero(dim_up);
    dx(n + 2 + i) = 1.0;       // x_{k+i}
    dx(n + 2 + i + 1) = -1.0;  // -x_{k+i+1}
    const double num = d.dot(g_up * dx);
    const double den = d.dot(g_up * d);
    const VarId gv = find_var(lower, "gamma_" + std::to_string(i));
    double gamma = den > 1e-14 ? num / den : 0.0;
    gamma = std::clamp(gamma, lower.vars[gv].lo, lower.vars[gv].hi);
    x[gv] = gamma;
  }
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= i - 1; ++j) {
      double a = x[find_var(lower, "gamma_" + std::to_string(j == i - 1 ? i - 1 : j))];
      if (j < i - 1) {
        a = x[find_var(lower, "gamma_" + std::to_string(j))];
        for (int l = j + 1; l <= i - 1; ++l)
          a += x[find_var(lower, "gamma_" + std::to_string(l))] * chiv[{j, l}];
      }
      const VarId av = find_var(lower, "alpha_" + std::to_string(i) + "_" + std::to_string(j));
      if (av >= 0) x[av] = std::clamp(a, lower.vars[av].lo, lower.vars[av].hi);
    }
  }
  complete_defined_vars(lower, x);
  lower.clip(x);
  return x;
}

std::string SolveReport::to_json(bool include_timing) const {
  nlohmann::json j;
  j["upper_bound"] = upper_bound;
  j["incumbent_value"] = incumbent_value;
  j["rel_gap"] = rel_gap;
  j["nodes"] = nodes;
  j["cuts"] = cuts;
  j["termination"] = termination;
  j["sound"] = sound;
  j["incumbent"] = incumbent;
  if (include_timing) j["wall_time_s"] = wall_time_s;
  return j.dump(1);
}

}  // namespace ncgwc

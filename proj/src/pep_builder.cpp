#include "ncgwc/pep_builder.hpp"

#include "ncgwc/bounds.hpp"
#include "ncgwc/selectors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>

namespace ncgwc {

namespace {

struct Interval {
  double lo = 0.0, hi = 0.0;
};

Interval interval_mul(Interval a, Interval b) {
  const double c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {std::min(std::min(c[0], c[1]), std::min(c[2], c[3])),
          std::max(std::max(c[0], c[1]), std::max(c[2], c[3]))};
}

Interval var_interval(const QcqpProblem& p, VarId v) { return {p.vars[v].lo, p.vars[v].hi}; }

Interval interval_of(const QcqpProblem& p, const QuadExpr& e) {
  Interval out{e.constant, e.constant};
  for (const auto& [v, c] : e.lin) {
    const Interval t = interval_mul(var_interval(p, v), {c, c});
    out.lo += t.lo;
    out.hi += t.hi;
  }
  for (const auto& [k, c] : e.quad) {
    Interval t;
    if (k.first == k.second) {
      const Interval a = var_interval(p, k.first);
      const double m = std::max(a.lo * a.lo, a.hi * a.hi);
      t = {(a.lo <= 0.0 && a.hi >= 0.0) ? 0.0 : std::min(a.lo * a.lo, a.hi * a.hi), m};
    } else {
      t = interval_mul(var_interval(p, k.first), var_interval(p, k.second));
    }
    out.lo += std::min(c * t.lo, c * t.hi);
    out.hi += std::max(c * t.lo, c * t.hi);
  }
  return out;
}

bool expr_touches_heuristic(const QcqpProblem& p, const QuadExpr& e) {
  for (const auto& [v, c] : e.lin)
    if (p.vars[v].heuristic) return true;
  for (const auto& [k, c] : e.quad)
    if (p.vars[k.first].heuristic || p.vars[k.second].heuristic) return true;
  return false;
}

// lin_expr must be linear; returns v * lin_expr
QuadExpr times_var(const QuadExpr& lin_expr, VarId v) {
  if (!lin_expr.is_linear()) throw std::logic_error("times_var: expression not linear");
  QuadExpr out;
  out.add_lin(v, lin_expr.constant);
  for (const auto& [u, c] : lin_expr.lin) out.add_quad(u, v, c);
  return out;
}

// Registers Gram scalar variables with the given diagonal boxes;
// off-diagonals get Cauchy-Schwarz boxes. A pinned column is fixed to zero.
void make_gram_vars(QcqpProblem& p, const std::vector<double>& diag_hi,
                    const std::vector<bool>& diag_heur, const std::vector<bool>& pinned) {
  const int dim = static_cast<int>(diag_hi.size());
  p.gram.dim = dim;
  p.gram.g.assign(dim, std::vector<VarId>(dim, -1));
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      const std::string name = "G_" + std::to_string(a) + "_" + std::to_string(b);
      double lo, hi;
      bool heur = diag_heur[a] || diag_heur[b];
      if (pinned[a] || pinned[b]) {
        lo = hi = 0.0;
        heur = false;
      } else if (a == b) {
        lo = 0.0;
        hi = diag_hi[a];
      } else {
        hi = std::sqrt(diag_hi[a] * diag_hi[b]);
        lo = -hi;
      }
      const VarId v = p.add_var(name, lo, hi, heur);
      p.gram.g[a][b] = v;
      p.gram.g[b][a] = v;
    }
  }
}

void make_h_vars(QcqpProblem& p, const std::vector<double>& diag_hi,
                 const std::vector<bool>& pinned) {
  const int dim = p.gram.dim;
  p.gram.h.assign(dim * dim, -1);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      const double bound = pinned[c] ? 0.0 : std::sqrt(diag_hi[c]) + 1e-12;
      p.gram.h[r * dim + c] =
          p.add_var("H_" + std::to_string(r) + "_" + std::to_string(c), -bound, bound);
    }
  }
  // G_ab = sum_r H_ra H_rb
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      QuadExpr e;
      e.add_lin(p.gram.g[a][b], 1.0);
      for (int r = 0; r < dim; ++r) e.add_quad(p.gram.h[r * dim + a], p.gram.h[r * dim + b], -1.0);
      p.add_constraint(std::move(e), Sense::EQ,
                       "gram-factor G(" + std::to_string(a) + "," + std::to_string(b) + ")",
                       /*psd_factor=*/true);
    }
  }
}

// tr(G (w o w)) with degree-reduction duplicates for entries quadratic in
// the selector variables. Returns the trace expression plus the duplicate
// variable per Gram entry (for implied-chain strengthening).
struct SquareBlock {
  QuadExpr trace;
  std::map<std::pair<int, int>, VarId> theta;
};

SquareBlock make_square_block(QcqpProblem& p, const std::string& key, const AffineVec& w) {
  SquareBlock blk;
  const int dim = p.gram.dim;
  for (int a = 0; a < dim; ++a) {
    for (int b = a; b < dim; ++b) {
      QuadExpr entry = outer_entry(w, w, a, b);
      entry.prune(0.0);
      if (entry.empty() && entry.constant == 0.0) continue;
      const double mult = (a == b) ? 1.0 : 2.0;
      const VarId gv = p.gram.gvar(a, b);
      if (entry.is_linear()) {
        blk.trace.add_lin(gv, mult * entry.constant);
        for (const auto& [v, c] : entry.lin) blk.trace.add_quad(v, gv, mult * c);
      } else {
        const Interval box = interval_of(p, entry);
        const VarId th =
            p.add_var("theta_" + key + "_" + std::to_string(a) + "_" + std::to_string(b), box.lo,
                      box.hi, expr_touches_heuristic(p, entry));
        QuadExpr pin = entry;
        pin.add_lin(th, -1.0);
        p.add_constraint(std::move(pin), Sense::EQ, "degree-reduction " + key);
        p.defined.push_back({th, entry});
        blk.theta[{a, b}] = th;
        blk.trace.add_quad(th, gv, mult);
      }
    }
  }
  return blk;
}

// One interpolation inequality between labels i and j.
void emit_interpolation(QcqpProblem& p, const ClassParams& cp, int i, int j,
                        std::map<std::pair<int, int>, SquareBlock>& b_cache) {
  const GramLayout& g = p.gram;
  const double q = cp.q();
  const double s = 1.0 / (2.0 * (1.0 - q));
  const AffineVec dx = subtract(g.x_sel[i], g.x_sel[j]);
  const AffineVec dg = subtract(g.g_sel[i], g.g_sel[j]);

  QuadExpr e = value_difference(g.f_var[i], g.f_var[j]);  // f_j - f_i
  e.add_scaled(tr_gram_outer(g, g.g_sel[j], dx), 1.0);
  e.add_scaled(tr_gram_outer(g, dg, dg), s / cp.L);
  const auto pair_key = std::minmax(i, j);
  auto it = b_cache.find(pair_key);
  if (it == b_cache.end()) {
    const std::string key =
        "B_" + g.labels[pair_key.first] + "_" + g.labels[pair_key.second];
    it = b_cache.emplace(pair_key, make_square_block(p, key, dx)).first;
  }
  e.add_scaled(it->second.trace, s * cp.mu);
  e.add_scaled(tr_gram_outer(g, dg, dx), -2.0 * q * s);
  p.add_constraint(std::move(e), Sense::LE,
                   "interpolation (" + g.labels[i] + "," + g.labels[j] + ")");
}

}  // namespace

double fr_beta_cap(double q, double c_max) {
  if (c_max <= 1.0) {
    const double t = 1.0 - q;
    return t * t / (4.0 * q);
  }
  double best = (1.0 - q) * (1.0 - q) / (4.0 * q);  // value as c -> 1+
  const int grid = 2048;
  for (int i = 1; i <= grid; ++i) {
    const double t = static_cast<double>(i) / grid;
    const double c = 1.0 + (c_max - 1.0) * t * t;
    best = std::max(best, fr_beta_bound(q, c));
  }
  return best * 1.02;
}

QcqpProblem build_direction_pep(double eta, const ClassParams& cp, double c_prev,
                                const BuilderOptions& opts) {
  if (c_prev < 1.0) throw std::invalid_argument("build_direction_pep: c_prev >= 1 required");
  if (eta != 0.0 && eta != 1.0) throw std::invalid_argument("eta must be 0 or 1");
  const double q = cp.q();

  QcqpProblem p;
  p.psd_mode = opts.psd_mode;
  p.meta = {Family::Direction, eta,   1,      c_prev, {},
            cp.mu,             cp.L,  opts.coupling};

  // Gram order: [x_{k-1} | g_{k-1} | g_k | d_{k-1}]; the x column appears
  // only through differences, so it is pinned to zero without loss.
  const double u_g1 = opts.g_prev_box;
  std::vector<double> diag_hi = {0.0, u_g1, 1.0, c_prev * u_g1};
  std::vector<bool> diag_heur = {false, true, false, true};
  std::vector<bool> pinned = {true, false, false, false};
  make_gram_vars(p, diag_hi, diag_heur, pinned);

  const VarId f_km1 = p.add_var("f_km1", -1e6, 1e6);
  const VarId f_k = p.add_var("f_k", -1e6, 1e6);

  double beta_lo, beta_hi;
  bool beta_heur;
  if (eta == 0.0) {
    beta_lo = 0.0;
    beta_hi = (opts.coupling == CouplingSense::Equality && c_prev > 1.0)
                  ? fr_beta_bound(q, c_prev) * (1.0 + 1e-9)
                  : fr_beta_cap(q, c_prev);
    beta_heur = false;
  } else {
    beta_hi = 2.0 * std::max(1.0, fr_beta_cap(q, std::max(c_prev, 1.0 + 1e-6)));
    beta_lo = -beta_hi;
    beta_heur = true;
  }
  const VarId beta = p.add_var("beta", beta_lo, beta_hi, beta_heur);

  const double gamma_hi = (opts.coupling == CouplingSense::Equality)
                              ? (1.0 + q) / (cp.mu * c_prev)
                              : (1.0 + q) / cp.mu;
  const VarId gamma = p.add_var("gamma", 0.0, gamma_hi);

  const int dim = 4;
  const AffineVec e_x = unit_selector(dim, 0);
  const AffineVec e_g1 = unit_selector(dim, 1);
  const AffineVec e_gk = unit_selector(dim, 2);
  const AffineVec e_d1 = unit_selector(dim, 3);
  const AffineVec minus_d1 = add_scaled(zero_selector(dim), e_d1, -1.0);

  GramLayout& g = p.gram;
  g.labels = {"k-1", "k"};
  g.x_sel = {e_x, add_var_multiple(e_x, minus_d1, gamma)};  // x_k = x_{k-1} - gamma d_{k-1}
  g.g_sel = {e_g1, e_gk};
  g.f_var = {f_km1, f_k};
  g.d_labels = {"k-1", "k"};
  g.d_sel = {e_d1, add_var_multiple(e_gk, e_d1, beta)};  // d_k = g_k + beta d_{k-1}

  // line-search identities
  {
    QuadExpr e = tr_gram_outer(g, e_g1, e_d1);
    e.add_scaled(tr_gram_outer(g, e_g1, e_g1), -1.0);
    p.add_constraint(std::move(e), Sense::EQ, "line-search <g_{k-1},d_{k-1}> = |g_{k-1}|^2");
  }
  p.add_constraint(tr_gram_outer(g, e_gk, e_d1), Sense::EQ, "line-search <g_k,d_{k-1}> = 0");
  {
    const AffineVec dx = subtract(g.x_sel[0], g.x_sel[1]);
    p.add_constraint(tr_gram_outer(g, e_gk, dx), Sense::EQ, "line-search <g_k,x_{k-1}-x_k> = 0");
  }
  // update-parameter definition: beta ||g_{k-1}||^2 = ||g_k||^2 - eta <g_k,g_{k-1}>
  {
    QuadExpr e = times_var(tr_gram_outer(g, e_g1, e_g1), beta);
    e.add_scaled(tr_gram_outer(g, e_gk, e_gk), -1.0);
    e.add_scaled(tr_gram_outer(g, e_gk, e_g1), eta);
    p.add_constraint(std::move(e), Sense::EQ, "update-parameter definition");
  }
  // direction-quality coupling
  {
    QuadExpr e = tr_gram_outer(g, e_d1, e_d1);
    e.add_scaled(tr_gram_outer(g, e_g1, e_g1), -c_prev);
    p.add_constraint(std::move(e),
                     opts.coupling == CouplingSense::Equality ? Sense::EQ : Sense::LE,
                     "direction-quality coupling");
  }
  // interpolation between the two points
  std::map<std::pair<int, int>, SquareBlock> b_cache;
  emit_interpolation(p, cp, 0, 1, b_cache);
  emit_interpolation(p, cp, 1, 0, b_cache);
  // normalization ||g_k||^2 = 1
  {
    QuadExpr e = tr_gram_outer(g, e_gk, e_gk);
    e.add_constant(-1.0);
    p.add_constraint(std::move(e), Sense::EQ, "normalization |g_k|^2 = 1");
  }
  // objective tr(G theta), theta duplicating (g_k + beta d_{k-1}) o itself
  SquareBlock obj = make_square_block(p, "dk", g.d_sel[1]);
  p.objective = obj.trace;

  if (opts.strengthen) {
    // implied degree-reduction chains: with u = beta G11 and v = gamma G11,
    //   theta_dk(3,3) G11 = beta u   and   theta_B(3,3) G11 = gamma v,
    // both direct consequences of the duplicate definitions.
    const VarId g11 = g.gvar(1, 1);
    const auto th_obj = obj.theta.find({3, 3});
    if (th_obj != obj.theta.end()) {
      const Interval ub = interval_mul({beta_lo, beta_hi}, {0.0, u_g1});
      const VarId u = p.add_var("beta_g11", ub.lo, ub.hi, true);
      QuadExpr udef;
      udef.add_quad(beta, g11, 1.0);
      QuadExpr pin = udef;
      pin.add_lin(u, -1.0);
      p.add_constraint(std::move(pin), Sense::EQ, "implied-chain beta*G11");
      p.defined.push_back({u, udef});
      QuadExpr chain;
      chain.add_quad(th_obj->second, g11, 1.0);
      chain.add_quad(beta, u, -1.0);
      p.add_constraint(std::move(chain), Sense::EQ, "implied-chain theta_dk*G11 = beta*u");
    }
    const auto blk = b_cache.find({0, 1});
    if (blk != b_cache.end()) {
      const auto th_b = blk->second.theta.find({3, 3});
      if (th_b != blk->second.theta.end()) {
        const VarId v = p.add_var("gamma_g11", 0.0, gamma_hi * u_g1, true);
        QuadExpr vdef;
        vdef.add_quad(gamma, g11, 1.0);
        QuadExpr pin = vdef;
        pin.add_lin(v, -1.0);
        p.add_constraint(std::move(pin), Sense::EQ, "implied-chain gamma*G11");
        p.defined.push_back({v, vdef});
        QuadExpr chain;
        chain.add_quad(th_b->second, g11, 1.0);
        chain.add_quad(gamma, v, -1.0);
        p.add_constraint(std::move(chain), Sense::EQ, "implied-chain theta_B*G11 = gamma*v");
      }
    }
  }

  make_h_vars(p, diag_hi, pinned);
  return p;
}

namespace {

// Shared construction for the Lyapunov and exact N-step upper problems.
QcqpProblem build_upper(double eta, const ClassParams& cp, std::optional<double> c, int n_steps,
                        const BuilderOptions& opts) {
  if (n_steps < 1) throw std::invalid_argument("n_steps >= 1 required");
  if (eta != 0.0 && eta != 1.0) throw std::invalid_argument("eta must be 0 or 1");
  const double q = cp.q();
  const bool exact = !c.has_value();
  const int n = n_steps;
  const int dim = 2 * n + 3;

  QcqpProblem p;
  p.psd_mode = opts.psd_mode;
  p.meta = {exact ? Family::ExactUpper : Family::LyapunovUpper,
            eta,
            n,
            c,
            {},
            cp.mu,
            cp.L,
            opts.coupling};

  // Gram order: [d_k | g_k..g_{k+N} | x_k..x_{k+N}]
  const auto gi = [&](int i) { return 1 + i; };
  const auto xi = [&](int i) { return n + 2 + i; };
  std::vector<double> diag_hi(dim);
  std::vector<bool> diag_heur(dim, false), pinned(dim, false);
  diag_hi[0] = exact ? 0.0 : 2.0 * cp.L * (*c);
  pinned[0] = exact;
  for (int i = 0; i <= n; ++i) {
    diag_hi[gi(i)] = 2.0 * cp.L;    // ||g||^2 <= 2L(f - f*) <= 2L
    diag_hi[xi(i)] = 2.0 / cp.mu;   // mu/2 ||x - x*||^2 <= f - f* <= 1
  }
  make_gram_vars(p, diag_hi, diag_heur, pinned);

  GramLayout& g = p.gram;
  const std::string base = exact ? "" : "k+";
  g.labels.push_back("star");
  g.x_sel.push_back(zero_selector(dim));
  g.g_sel.push_back(zero_selector(dim));
  g.f_var.push_back(-1);
  std::vector<VarId> fv(n + 1);
  for (int i = 0; i <= n; ++i) {
    fv[i] = p.add_var("f_" + std::to_string(i), 0.0, 1.0);
    g.labels.push_back(exact ? std::to_string(i) : "k+" + std::to_string(i));
    g.x_sel.push_back(unit_selector(dim, xi(i)));
    g.g_sel.push_back(unit_selector(dim, gi(i)));
    g.f_var.push_back(fv[i]);
  }

  // update parameters and their running products; boxes from the
  // direction-quality recursion started at c (or at 1 from initialization)
  std::vector<VarId> beta(std::max(0, n - 1), -1);
  std::vector<double> beta_abs(std::max(0, n - 1), 0.0);
  double c_chain = exact ? 1.0 : *c;
  for (int i = 0; i + 1 < n; ++i) {
    double b_hi, b_lo;
    bool heur;
    const double cap = fr_beta_cap(q, c_chain);
    if (eta == 0.0) {
      b_lo = 0.0;
      b_hi = cap;
      heur = false;
    } else {
      b_hi = 2.0 * std::max(1.0, cap);
      b_lo = -b_hi;
      heur = true;
    }
    beta[i] = p.add_var("beta_" + std::to_string(i), b_lo, b_hi, heur);
    beta_abs[i] = std::max(std::abs(b_lo), std::abs(b_hi));
    c_chain = fr_direction_recursion(q, c_chain).c;
  }

  // chi_{j,i} products and the composite directions
  std::map<std::pair<int, int>, VarId> chi;
  for (int i = 1; i <= n - 1; ++i) {
    for (int j = 0; j <= i - 1; ++j) {
      double mag = 1.0;
      for (int l = j; l <= i - 1; ++l) mag *= beta_abs[l];
      chi[{j, i}] = p.add_var("chi_" + std::to_string(j) + "_" + std::to_string(i), -mag, mag,
                              eta == 1.0);
      if (eta == 0.0) p.vars[chi[{j, i}]].lo = 0.0;  // FR products are nonnegative
    }
  }

  std::vector<AffineVec> d_sel(n);
  d_sel[0] = exact ? unit_selector(dim, gi(0)) : unit_selector(dim, 0);
  for (int i = 1; i <= n - 1; ++i) {
    AffineVec d = unit_selector(dim, gi(i));
    for (int j = 1; j <= i - 1; ++j) d = add_var_multiple(d, unit_selector(dim, gi(j)), chi[{j, i}]);
    d = add_var_multiple(d, d_sel[0], chi[{0, i}]);
    d_sel[i] = d;
  }
  for (int i = 0; i < n; ++i) {
    g.d_labels.push_back(exact ? std::to_string(i) : "k+" + std::to_string(i));
    g.d_sel.push_back(d_sel[i]);
  }

  // interpolation over all ordered label pairs
  std::map<std::pair<int, int>, SquareBlock> b_cache;
  const int labels = n + 2;
  for (int i = 0; i < labels; ++i)
    for (int j = 0; j < labels; ++j)
      if (i != j) emit_interpolation(p, cp, i, j, b_cache);

  // initial direction-quality budget
  if (!exact) {
    QuadExpr e = tr_gram_outer(g, d_sel[0], d_sel[0]);
    e.add_scaled(tr_gram_outer(g, g.g_sel[1], g.g_sel[1]), -*c);
    p.add_constraint(std::move(e), Sense::LE, "direction-quality budget");
  }
  // relaxed line-search identities per step
  for (int i = 0; i < n; ++i) {
    const AffineVec& gnext = g.g_sel[2 + i];  // g_{k+i+1}
    p.add_constraint(tr_gram_outer(g, gnext, d_sel[i]), Sense::EQ,
                     "line-search <g_{+" + std::to_string(i + 1) + "},d_{+" + std::to_string(i) +
                         "}> = 0");
    const AffineVec dx = subtract(g.x_sel[1 + i], g.x_sel[2 + i]);
    p.add_constraint(tr_gram_outer(g, gnext, dx), Sense::EQ,
                     "line-search <g_{+" + std::to_string(i + 1) + "},x_{+" + std::to_string(i) +
                         "}-x_{+" + std::to_string(i + 1) + "}> = 0");
    QuadExpr e = tr_gram_outer(g, g.g_sel[1 + i], d_sel[i]);
    e.add_scaled(tr_gram_outer(g, g.g_sel[1 + i], g.g_sel[1 + i]), -1.0);
    p.add_constraint(std::move(e), Sense::EQ,
                     "line-search <g_{+" + std::to_string(i) + "},d_{+" + std::to_string(i) +
                         "}> = |g|^2");
  }
  // update-parameter definitions
  for (int i = 1; i <= n - 1; ++i) {
    QuadExpr e = times_var(tr_gram_outer(g, g.g_sel[i], g.g_sel[i]), beta[i - 1]);
    e.add_scaled(tr_gram_outer(g, g.g_sel[i + 1], g.g_sel[i + 1]), -1.0);
    e.add_scaled(tr_gram_outer(g, g.g_sel[i + 1], g.g_sel[i]), eta);
    p.add_constraint(std::move(e), Sense::EQ,
                     "update-parameter definition step " + std::to_string(i - 1));
  }
  // chi recursions
  for (int i = 1; i <= n - 1; ++i) {
    {
      QuadExpr e;
      e.add_lin(chi[{i - 1, i}], 1.0);
      e.add_lin(beta[i - 1], -1.0);
      p.add_constraint(std::move(e), Sense::EQ,
                       "chi(" + std::to_string(i - 1) + "," + std::to_string(i) + ") = beta");
    }
    for (int j = 0; j <= i - 2; ++j) {
      QuadExpr e;
      e.add_lin(chi[{j, i}], 1.0);
      e.add_quad(chi[{j, i - 1}], beta[i - 1], -1.0);
      p.add_constraint(std::move(e), Sense::EQ,
                       "chi(" + std::to_string(j) + "," + std::to_string(i) + ") recursion");
    }
  }
  // normalization f_k - f_* = 1
  {
    QuadExpr e;
    e.add_lin(fv[0], 1.0);
    e.add_constant(-1.0);
    p.add_constraint(std::move(e), Sense::EQ, "normalization f_k - f_* = 1");
  }
  p.objective.add_lin(fv[n], 1.0);

  make_h_vars(p, diag_hi, pinned);
  return p;
}

}  // namespace

QcqpProblem build_lyapunov_upper(double eta, const ClassParams& cp, double c, int n_steps,
                                 const BuilderOptions& opts) {
  if (c < 1.0) throw std::invalid_argument("build_lyapunov_upper: c >= 1 required");
  return build_upper(eta, cp, c, n_steps, opts);
}

QcqpProblem build_exact_upper(double eta, const ClassParams& cp, int n_steps,
                              const BuilderOptions& opts) {
  return build_upper(eta, cp, std::nullopt, n_steps, opts);
}

QcqpProblem build_lower_fixed_beta(double eta, const ClassParams& cp, std::optional<double> c,
                                   int n_steps, const std::vector<double>& betas,
                                   const BuilderOptions& opts) {
  const int n = n_steps;
  if (n < 1) throw std::invalid_argument("n_steps >= 1 required");
  if (static_cast<int>(betas.size()) != n - 1) {
    throw std::invalid_argument("build_lower_fixed_beta: need exactly N-1 betas");
  }
  const bool exact = !c.has_value();
  const int dim = n + 3;

  QcqpProblem p;
  p.psd_mode = opts.psd_mode;
  p.meta = {Family::LowerFixedBeta, eta, n, c, betas, cp.mu, cp.L, opts.coupling};

  // Gram order: [x_k | g_k..g_{k+N} | d_k]
  const auto gi = [&](int i) { return 1 + i; };
  const int di = n + 2;
  std::vector<double> diag_hi(dim);
  std::vector<bool> diag_heur(dim, false), pinned(dim, false);
  diag_hi[0] = 2.0 / cp.mu;
  for (int i = 0; i <= n; ++i) diag_hi[gi(i)] = 2.0 * cp.L;
  diag_hi[di] = exact ? 0.0 : 2.0 * cp.L * (*c);
  pinned[di] = exact;
  make_gram_vars(p, diag_hi, diag_heur, pinned);

  GramLayout& g = p.gram;
  g.labels.push_back("star");
  g.x_sel.push_back(zero_selector(dim));
  g.g_sel.push_back(zero_selector(dim));
  g.f_var.push_back(-1);
  std::vector<VarId> fv(n + 1);
  for (int i = 0; i <= n; ++i) {
    fv[i] = p.add_var("f_" + std::to_string(i), 0.0, 1.0);
    g.labels.push_back(std::to_string(i));
    g.g_sel.push_back(unit_selector(dim, gi(i)));
    g.f_var.push_back(fv[i]);
  }

  // constant chi products from the frozen update parameters
  std::map<std::pair<int, int>, double> chi;
  for (int i = 1; i <= n - 1; ++i) {
    chi[{i - 1, i}] = betas[i - 1];
    for (int j = 0; j <= i - 2; ++j) chi[{j, i}] = chi[{j, i - 1}] * betas[i - 1];
  }

  // gammas and the aggregated step coefficients alpha
  std::vector<VarId> gam(n);
  for (int i = 0; i < n; ++i) gam[i] = p.add_var("gamma_" + std::to_string(i), 0.0, 2.0 / cp.mu);
  std::map<std::pair<int, int>, VarId> alpha;
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= i - 1; ++j) {
      // alpha_{i,j} = gamma_j + sum_l gamma_l chi_{j,l}: box by intervals
      Interval box = var_interval(p, gam[j]);
      for (int l = j + 1; l <= i - 1; ++l) {
        const Interval t = interval_mul(var_interval(p, gam[l]), {chi[{j, l}], chi[{j, l}]});
        box.lo += t.lo;
        box.hi += t.hi;
      }
      alpha[{i, j}] =
          p.add_var("alpha_" + std::to_string(i) + "_" + std::to_string(j), box.lo, box.hi);
    }
  }

  // selectors
  const AffineVec d0 = exact ? unit_selector(dim, gi(0)) : unit_selector(dim, di);
  g.x_sel.push_back(unit_selector(dim, 0));  // x_k
  for (int i = 1; i <= n; ++i) {
    AffineVec x = unit_selector(dim, 0);
    for (int j = 1; j <= i - 1; ++j) {
      const AffineVec mg = add_scaled(zero_selector(dim), unit_selector(dim, gi(j)), -1.0);
      x = add_var_multiple(x, mg, alpha[{i, j}]);
    }
    const AffineVec md = add_scaled(zero_selector(dim), d0, -1.0);
    x = add_var_multiple(x, md, alpha[{i, 0}]);
    g.x_sel.push_back(x);
  }
  std::vector<AffineVec> d_sel(n);
  d_sel[0] = d0;
  for (int i = 1; i <= n - 1; ++i) {
    AffineVec d = unit_selector(dim, gi(i));
    for (int j = 1; j <= i - 1; ++j) d = add_scaled(d, unit_selector(dim, gi(j)), chi[{j, i}]);
    d = add_scaled(d, d0, chi[{0, i}]);
    d_sel[i] = d;
  }
  for (int i = 0; i < n; ++i) {
    g.d_labels.push_back(std::to_string(i));
    g.d_sel.push_back(d_sel[i]);
  }

  std::map<std::pair<int, int>, SquareBlock> b_cache;
  const int labels = n + 2;
  for (int i = 0; i < labels; ++i)
    for (int j = 0; j < labels; ++j)
      if (i != j) emit_interpolation(p, cp, i, j, b_cache);

  if (!exact) {
    QuadExpr e = tr_gram_outer(g, d0, d0);
    e.add_scaled(tr_gram_outer(g, g.g_sel[1], g.g_sel[1]), -*c);
    p.add_constraint(std::move(e), Sense::LE, "direction-quality budget");
  }
  for (int i = 0; i < n; ++i) {
    const AffineVec& gnext = g.g_sel[2 + i];
    p.add_constraint(tr_gram_outer(g, gnext, d_sel[i]), Sense::EQ,
                     "line-search <g_{+" + std::to_string(i + 1) + "},d_{+" + std::to_string(i) +
                         "}> = 0");
    const AffineVec dx = subtract(g.x_sel[1 + i], g.x_sel[2 + i]);
    p.add_constraint(tr_gram_outer(g, gnext, dx), Sense::EQ,
                     "line-search <g_{+" + std::to_string(i + 1) + "},x_{+" + std::to_string(i) +
                         "}-x_{+" + std::to_string(i + 1) + "}> = 0");
    QuadExpr e = tr_gram_outer(g, g.g_sel[1 + i], d_sel[i]);
    e.add_scaled(tr_gram_outer(g, g.g_sel[1 + i], g.g_sel[1 + i]), -1.0);
    p.add_constraint(std::move(e), Sense::EQ,
                     "line-search <g_{+" + std::to_string(i) + "},d_{+" + std::to_string(i) +
                         "}> = |g|^2");
  }
  // alpha pins
  for (int i = 1; i <= n; ++i) {
    {
      QuadExpr e;
      e.add_lin(alpha[{i, i - 1}], 1.0);
      e.add_lin(gam[i - 1], -1.0);
      p.add_constraint(std::move(e), Sense::EQ,
                       "alpha(" + std::to_string(i) + "," + std::to_string(i - 1) + ") = gamma");
    }
    for (int j = 0; j <= i - 2; ++j) {
      QuadExpr e;
      e.add_lin(alpha[{i, j}], 1.0);
      e.add_lin(gam[j], -1.0);
      for (int l = j + 1; l <= i - 1; ++l) e.add_lin(gam[l], -chi[{j, l}]);
      p.add_constraint(std::move(e), Sense::EQ,
                       "alpha(" + std::to_string(i) + "," + std::to_string(j) + ") aggregation");
    }
  }
  // frozen update-parameter definitions kept as feasibility constraints
  for (int i = 1; i <= n - 1; ++i) {
    QuadExpr e = tr_gram_outer(g, g.g_sel[i], g.g_sel[i]);
    e *= betas[i - 1];
    e.add_scaled(tr_gram_outer(g, g.g_sel[i + 1], g.g_sel[i + 1]), -1.0);
    e.add_scaled(tr_gram_outer(g, g.g_sel[i + 1], g.g_sel[i]), eta);
    p.add_constraint(std::move(e), Sense::EQ,
                     "frozen update-parameter step " + std::to_string(i - 1));
  }
  {
    QuadExpr e;
    e.add_lin(fv[0], 1.0);
    e.add_constant(-1.0);
    p.add_constraint(std::move(e), Sense::EQ, "normalization f_k - f_* = 1");
  }
  p.objective.add_lin(fv[n], 1.0);

  make_h_vars(p, diag_hi, pinned);
  return p;
}

TripletSet extract_triplets(const QcqpProblem& problem, const Point& incumbent, double psd_tol) {
  const GramLayout& g = problem.gram;
  const Mat gram = problem.gram_value(incumbent);
  Mat h;
  bool use_point_h = false;
  if (auto hp = problem.h_value(incumbent)) {
    if ((hp->transpose() * (*hp) - gram).cwiseAbs().maxCoeff() <= psd_tol) {
      h = *hp;
      use_point_h = true;
    }
  }
  if (!use_point_h) {
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -psd_tol * scale) {
      throw std::runtime_error("extract_triplets: Gram matrix indefinite beyond tolerance");
    }
    const Vec lam = es.eigenvalues().cwiseMax(0.0);
    h = lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  }

  TripletSet out;
  for (size_t i = 0; i < g.labels.size(); ++i) {
    const Vec x = h * eval_selector(g.x_sel[i], incumbent);
    const Vec grad = h * eval_selector(g.g_sel[i], incumbent);
    const double f = g.f_var[i] >= 0 ? incumbent[g.f_var[i]] : 0.0;
    out.push_back(g.labels[i], Triplet(x, grad, f));
  }
  return out;
}

}  // namespace ncgwc

#include "ncgwc/qcqp.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cmath>

namespace ncgwc {

void QuadExpr::add_lin(VarId v, double coef) {
  if (coef == 0.0) return;
  lin[v] += coef;
}

void QuadExpr::add_quad(VarId a, VarId b, double coef) {
  if (coef == 0.0) return;
  if (a > b) std::swap(a, b);
  quad[{a, b}] += coef;
}

void QuadExpr::add_scaled(const QuadExpr& other, double scale) {
  if (scale == 0.0) return;
  constant += scale * other.constant;
  for (const auto& [v, c] : other.lin) lin[v] += scale * c;
  for (const auto& [k, c] : other.quad) quad[k] += scale * c;
}

QuadExpr& QuadExpr::operator*=(double s) {
  constant *= s;
  for (auto& [v, c] : lin) c *= s;
  for (auto& [k, c] : quad) c *= s;
  return *this;
}

double QuadExpr::eval(const Point& x) const {
  double v = constant;
  for (const auto& [i, c] : lin) v += c * x[i];
  for (const auto& [k, c] : quad) v += c * x[k.first] * x[k.second];
  return v;
}

void QuadExpr::add_gradient(const Point& x, double scale, std::vector<double>& out) const {
  for (const auto& [i, c] : lin) out[i] += scale * c;
  for (const auto& [k, c] : quad) {
    if (k.first == k.second) {
      out[k.first] += scale * 2.0 * c * x[k.first];
    } else {
      out[k.first] += scale * c * x[k.second];
      out[k.second] += scale * c * x[k.first];
    }
  }
}

void QuadExpr::prune(double tol) {
  for (auto it = lin.begin(); it != lin.end();) {
    it = std::abs(it->second) <= tol ? lin.erase(it) : std::next(it);
  }
  for (auto it = quad.begin(); it != quad.end();) {
    it = std::abs(it->second) <= tol ? quad.erase(it) : std::next(it);
  }
}

double Constraint::violation(const Point& x) const {
  const double v = expr.eval(x);
  switch (sense) {
    case Sense::LE:
      return v;
    case Sense::GE:
      return -v;
    default:
      return std::abs(v);
  }
}

double AffineScalar::eval(const Point& x) const {
  double v = c0;
  for (const auto& [i, c] : terms) v += c * x[i];
  return v;
}

VarId QcqpProblem::add_var(std::string name, double lo, double hi, bool heuristic) {
  if (!(lo <= hi)) throw std::invalid_argument("add_var: empty box for " + name);
  vars.push_back({std::move(name), lo, hi, heuristic});
  return static_cast<VarId>(vars.size()) - 1;
}

void QcqpProblem::add_constraint(QuadExpr expr, Sense sense, std::string tag, bool psd_factor) {
  expr.prune(0.0);
  if (expr.empty() && expr.constant == 0.0) return;  // trivially satisfied identity
  cons.push_back({std::move(expr), sense, std::move(tag), psd_factor});
}

Mat QcqpProblem::gram_value(const Point& x) const {
  Mat g(gram.dim, gram.dim);
  for (int a = 0; a < gram.dim; ++a)
    for (int b = 0; b < gram.dim; ++b) g(a, b) = x[gram.gvar(a, b)];
  return g;
}

std::optional<Mat> QcqpProblem::h_value(const Point& x) const {
  if (gram.h.empty()) return std::nullopt;
  Mat h(gram.dim, gram.dim);
  for (int r = 0; r < gram.dim; ++r)
    for (int c = 0; c < gram.dim; ++c) h(r, c) = x[gram.h[r * gram.dim + c]];
  return h;
}

double QcqpProblem::max_violation(const Point& x, bool include_psd_factor) const {
  double worst = 0.0;
  for (const auto& con : cons) {
    if (!include_psd_factor && con.psd_factor) continue;
    worst = std::max(worst, con.violation(x));
  }
  return worst;
}

void QcqpProblem::clip(Point& x) const {
  for (int i = 0; i < num_vars(); ++i) x[i] = std::clamp(x[i], vars[i].lo, vars[i].hi);
}

// ---------------------------------------------------------------------------
// JSON serialization

using nlohmann::json;

namespace {

json expr_to_json(const QuadExpr& e) {
  json j;
  j["c"] = e.constant;
  json lin = json::array();
  for (const auto& [v, c] : e.lin) lin.push_back({v, c});
  json quad = json::array();
  for (const auto& [k, c] : e.quad) quad.push_back({k.first, k.second, c});
  j["lin"] = std::move(lin);
  j["quad"] = std::move(quad);
  return j;
}

QuadExpr expr_from_json(const json& j) {
  QuadExpr e(j.at("c").get<double>());
  for (const auto& t : j.at("lin")) e.add_lin(t[0].get<VarId>(), t[1].get<double>());
  for (const auto& t : j.at("quad"))
    e.add_quad(t[0].get<VarId>(), t[1].get<VarId>(), t[2].get<double>());
  return e;
}

json affine_to_json(const AffineVec& v) {
  json arr = json::array();
  for (const auto& s : v) {
    json terms = json::array();
    for (const auto& [var, c] : s.terms) terms.push_back({var, c});
    arr.push_back({{"c0", s.c0}, {"terms", std::move(terms)}});
  }
  return arr;
}

AffineVec affine_from_json(const json& arr) {
  AffineVec v;
  for (const auto& s : arr) {
    AffineScalar a;
    a.c0 = s.at("c0").get<double>();
    for (const auto& t : s.at("terms")) a.terms.push_back({t[0].get<VarId>(), t[1].get<double>()});
    v.push_back(std::move(a));
  }
  return v;
}

const char* sense_str(Sense s) {
  switch (s) {
    case Sense::LE:
      return "<=";
    case Sense::GE:
      return ">=";
    default:
      return "==";
  }
}

Sense sense_of(const std::string& s) {
  if (s == "<=") return Sense::LE;
  if (s == ">=") return Sense::GE;
  return Sense::EQ;
}

}  // namespace

std::string QcqpProblem::to_json() const {
  json j;
  json vjs = json::array();
  for (const auto& v : vars) {
    vjs.push_back({{"name", v.name}, {"lo", v.lo}, {"hi", v.hi}, {"heuristic", v.heuristic}});
  }
  j["variables"] = std::move(vjs);
  j["objective"] = expr_to_json(objective);
  json cjs = json::array();
  for (const auto& c : cons) {
    cjs.push_back({{"expr", expr_to_json(c.expr)},
                   {"sense", sense_str(c.sense)},
                   {"tag", c.tag},
                   {"psd_factor", c.psd_factor}});
  }
  j["constraints"] = std::move(cjs);

  json gj;
  gj["dim"] = gram.dim;
  gj["g"] = gram.g;
  gj["h"] = gram.h;
  gj["labels"] = gram.labels;
  gj["f_var"] = gram.f_var;
  json xs = json::array(), gs = json::array(), ds = json::array();
  for (const auto& s : gram.x_sel) xs.push_back(affine_to_json(s));
  for (const auto& s : gram.g_sel) gs.push_back(affine_to_json(s));
  for (const auto& s : gram.d_sel) ds.push_back(affine_to_json(s));
  gj["x_sel"] = std::move(xs);
  gj["g_sel"] = std::move(gs);
  gj["d_sel"] = std::move(ds);
  gj["d_labels"] = gram.d_labels;
  j["gram"] = std::move(gj);

  json mj;
  mj["family"] = static_cast<int>(meta.family);
  mj["eta"] = meta.eta;
  mj["N"] = meta.N;
  if (meta.c) mj["c"] = *meta.c;
  mj["fixed_betas"] = meta.fixed_betas;
  mj["mu"] = meta.mu;
  mj["L"] = meta.L;
  mj["coupling"] = meta.coupling == CouplingSense::Equality ? "eq" : "le";
  j["meta"] = std::move(mj);
  j["psd_mode"] = psd_mode == PsdMode::LazyCuts ? "lazy" : "cholesky";
  json djs = json::array();
  for (const auto& [v, e] : defined) djs.push_back({{"var", v}, {"expr", expr_to_json(e)}});
  j["defined"] = std::move(djs);
  return j.dump(1);
}

QcqpProblem QcqpProblem::from_json(const std::string& text) {
  const json j = json::parse(text);
  QcqpProblem p;
  for (const auto& v : j.at("variables")) {
    p.vars.push_back({v.at("name").get<std::string>(), v.at("lo").get<double>(),
                      v.at("hi").get<double>(), v.at("heuristic").get<bool>()});
  }
  p.objective = expr_from_json(j.at("objective"));
  for (const auto& c : j.at("constraints")) {
    p.cons.push_back({expr_from_json(c.at("expr")), sense_of(c.at("sense").get<std::string>()),
                      c.at("tag").get<std::string>(), c.at("psd_factor").get<bool>()});
  }
  const auto& gj = j.at("gram");
  p.gram.dim = gj.at("dim").get<int>();
  p.gram.g = gj.at("g").get<std::vector<std::vector<VarId>>>();
  p.gram.h = gj.at("h").get<std::vector<VarId>>();
  p.gram.labels = gj.at("labels").get<std::vector<std::string>>();
  p.gram.f_var = gj.at("f_var").get<std::vector<VarId>>();
  for (const auto& s : gj.at("x_sel")) p.gram.x_sel.push_back(affine_from_json(s));
  for (const auto& s : gj.at("g_sel")) p.gram.g_sel.push_back(affine_from_json(s));
  for (const auto& s : gj.at("d_sel")) p.gram.d_sel.push_back(affine_from_json(s));
  p.gram.d_labels = gj.at("d_labels").get<std::vector<std::string>>();

  const auto& mj = j.at("meta");
  p.meta.family = static_cast<Family>(mj.at("family").get<int>());
  p.meta.eta = mj.at("eta").get<double>();
  p.meta.N = mj.at("N").get<int>();
  if (mj.contains("c")) p.meta.c = mj.at("c").get<double>();
  p.meta.fixed_betas = mj.at("fixed_betas").get<std::vector<double>>();
  p.meta.mu = mj.at("mu").get<double>();
  p.meta.L = mj.at("L").get<double>();
  p.meta.coupling =
      mj.at("coupling").get<std::string>() == "eq" ? CouplingSense::Equality : CouplingSense::UpperBound;
  p.psd_mode = j.at("psd_mode").get<std::string>() == "lazy" ? PsdMode::LazyCuts : PsdMode::Cholesky;
  for (const auto& d : j.at("defined")) {
    p.defined.push_back({d.at("var").get<VarId>(), expr_from_json(d.at("expr"))});
  }
  return p;
}

// ---------------------------------------------------------------------------
// CompiledProblem

void CompiledProblem::compile(const QuadExpr& e, CompiledExpr& out) {
  out.c0 = e.constant;
  out.lin_begin = static_cast<int>(lin_pool_.size());
  for (const auto& [v, c] : e.lin) lin_pool_.push_back({v, c});
  out.lin_end = static_cast<int>(lin_pool_.size());
  out.quad_begin = static_cast<int>(quad_pool_.size());
  for (const auto& [k, c] : e.quad) quad_pool_.push_back({k, c});
  out.quad_end = static_cast<int>(quad_pool_.size());
}

CompiledProblem::CompiledProblem(const QcqpProblem& p, bool include_psd_factor) {
  compile(p.objective, obj_);
  for (const auto& c : p.cons) {
    if (!include_psd_factor && c.psd_factor) continue;
    CompiledExpr e;
    compile(c.expr, e);
    cons_.push_back(e);
    senses_.push_back(c.sense);
  }
}

double CompiledProblem::eval(const CompiledExpr& e, const Point& x) const {
  double v = e.c0;
  for (int i = e.lin_begin; i < e.lin_end; ++i) v += lin_pool_[i].second * x[lin_pool_[i].first];
  for (int i = e.quad_begin; i < e.quad_end; ++i) {
    const auto& [k, c] = quad_pool_[i];
    v += c * x[k.first] * x[k.second];
  }
  return v;
}

void CompiledProblem::grad(const CompiledExpr& e, const Point& x, double scale,
                           std::vector<double>& out) const {
  for (int i = e.lin_begin; i < e.lin_end; ++i)
    out[lin_pool_[i].first] += scale * lin_pool_[i].second;
  for (int i = e.quad_begin; i < e.quad_end; ++i) {
    const auto& [k, c] = quad_pool_[i];
    if (k.first == k.second) {
      out[k.first] += scale * 2.0 * c * x[k.first];
    } else {
      out[k.first] += scale * c * x[k.second];
      out[k.second] += scale * c * x[k.first];
    }
  }
}

double CompiledProblem::eval_objective(const Point& x) const { return eval(obj_, x); }

void CompiledProblem::objective_gradient(const Point& x, double scale,
                                         std::vector<double>& out) const {
  grad(obj_, x, scale, out);
}

double CompiledProblem::eval_con(int i, const Point& x) const { return eval(cons_[i], x); }

void CompiledProblem::con_gradient(int i, const Point& x, double scale,
                                   std::vector<double>& out) const {
  grad(cons_[i], x, scale, out);
}

}  // namespace ncgwc

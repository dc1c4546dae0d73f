#pragma once

#include "ncgwc/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ncgwc {

using VarId = int;
using Point = std::vector<double>;

struct VarInfo {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  // heuristic boxes are subject to the incumbent-interiority check and get
  // doubled on violation; hard boxes are valid by construction
  bool heuristic = false;
};

// Sparse quadratic expression: c0 + sum a_i x_i + sum q_ij x_i x_j.
class QuadExpr {
 public:
  double constant = 0.0;
  std::map<VarId, double> lin;
  std::map<std::pair<VarId, VarId>, double> quad;  // key.first <= key.second

  QuadExpr() = default;
  explicit QuadExpr(double c) : constant(c) {}

  void add_constant(double c) { constant += c; }
  void add_lin(VarId v, double coef);
  void add_quad(VarId a, VarId b, double coef);
  void add_scaled(const QuadExpr& other, double scale);
  QuadExpr& operator*=(double s);

  double eval(const Point& x) const;
  // accumulates scale * grad(expr)(x) into out
  void add_gradient(const Point& x, double scale, std::vector<double>& out) const;
  void prune(double tol = 0.0);
  bool empty() const { return lin.empty() && quad.empty(); }
  bool is_linear() const { return quad.empty(); }
};

enum class Sense { LE, EQ, GE };  // expr <= 0, == 0, >= 0

struct Constraint {
  QuadExpr expr;
  Sense sense = Sense::EQ;
  std::string tag;
  bool psd_factor = false;  // one of the G = H'H rows
  // signed violation: positive means violated by that amount
  double violation(const Point& x) const;
};

// Affine selector coordinate: c0 + sum coef * var.
struct AffineScalar {
  double c0 = 0.0;
  std::vector<std::pair<VarId, double>> terms;

  bool is_constant() const { return terms.empty(); }
  double eval(const Point& x) const;
};

using AffineVec = std::vector<AffineScalar>;  // one scalar per Gram coordinate

// Gram bookkeeping: which scalar variables hold G and H entries, plus the
// per-label selectors needed to map a solved point back to triplets.
struct GramLayout {
  int dim = 0;
  std::vector<std::vector<VarId>> g;  // g[a][b] = g[b][a]
  std::vector<VarId> h;               // row-major dim*dim; empty if absent

  std::vector<std::string> labels;
  std::vector<AffineVec> x_sel, g_sel;
  std::vector<VarId> f_var;  // -1 = pinned to zero (the star label)
  std::vector<AffineVec> d_sel;
  std::vector<std::string> d_labels;

  VarId gvar(int a, int b) const { return g[std::min(a, b)][std::max(a, b)]; }
};

enum class PsdMode { Cholesky, LazyCuts };
enum class CouplingSense { Equality, UpperBound };
enum class Family { Direction, LyapunovUpper, ExactUpper, LowerFixedBeta };

struct ProblemMeta {
  Family family = Family::Direction;
  double eta = 1.0;
  int N = 1;
  std::optional<double> c;  // direction-quality budget; absent = exact flavor
  std::vector<double> fixed_betas;
  double mu = 0.0;
  double L = 1.0;
  CouplingSense coupling = CouplingSense::Equality;
  double q() const { return mu / L; }
};

struct QcqpProblem {
  std::vector<VarInfo> vars;
  QuadExpr objective;  // maximize
  std::vector<Constraint> cons;
  GramLayout gram;
  ProblemMeta meta;
  PsdMode psd_mode = PsdMode::LazyCuts;
  // definitional duplicates (theta entries, product chains) in evaluation
  // order: var := expr(previous vars)
  std::vector<std::pair<VarId, QuadExpr>> defined;

  VarId add_var(std::string name, double lo, double hi, bool heuristic = false);
  int num_vars() const { return static_cast<int>(vars.size()); }
  void add_constraint(QuadExpr expr, Sense sense, std::string tag, bool psd_factor = false);

  Mat gram_value(const Point& x) const;
  std::optional<Mat> h_value(const Point& x) const;
  // max violation across all constraints (optionally skipping the H rows)
  double max_violation(const Point& x, bool include_psd_factor = true) const;
  // clip a point into the variable boxes
  void clip(Point& x) const;

  std::string to_json() const;
  static QcqpProblem from_json(const std::string& text);
};

// Flat, cache-friendly image of the expressions for hot evaluation loops.
struct CompiledExpr {
  double c0 = 0.0;
  int lin_begin = 0, lin_end = 0;
  int quad_begin = 0, quad_end = 0;
};

class CompiledProblem {
 public:
  explicit CompiledProblem(const QcqpProblem& p, bool include_psd_factor = true);

  int num_cons() const { return static_cast<int>(cons_.size()); }
  double eval_objective(const Point& x) const;
  void objective_gradient(const Point& x, double scale, std::vector<double>& out) const;
  double eval_con(int i, const Point& x) const;
  void con_gradient(int i, const Point& x, double scale, std::vector<double>& out) const;
  Sense sense(int i) const { return senses_[i]; }

 private:
  struct Flat {
    CompiledExpr meta;
  };
  double eval(const CompiledExpr& e, const Point& x) const;
  void grad(const CompiledExpr& e, const Point& x, double scale, std::vector<double>& out) const;

  CompiledExpr obj_;
  std::vector<CompiledExpr> cons_;
  std::vector<Sense> senses_;
  std::vector<std::pair<int, double>> lin_pool_;
  std::vector<std::pair<std::pair<int, int>, double>> quad_pool_;

  void compile(const QuadExpr& e, CompiledExpr& out);
};

}  // namespace ncgwc

#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace ncgwc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Parameters of the class of L-smooth, mu-strongly convex functions.
// q = mu/L is the inverse condition number.
struct ClassParams {
  double mu;
  double L;

  ClassParams(double mu_, double L_) : mu(mu_), L(L_) {
    if (!(mu >= 0.0) || !(mu < L) || !std::isfinite(L)) {
      throw std::invalid_argument("ClassParams requires 0 <= mu < L < inf");
    }
  }

  double q() const { return mu / L; }
};

// A point/gradient/value record. The atom of interpolation and
// counter-example reconstruction.
struct Triplet {
  Vec x;
  Vec g;
  double f = 0.0;

  Triplet() = default;
  Triplet(Vec x_, Vec g_, double f_) : x(std::move(x_)), g(std::move(g_)), f(f_) {
    if (x.size() != g.size()) {
      throw std::invalid_argument("Triplet: point and gradient dimensions differ");
    }
    if (!std::isfinite(f)) throw std::invalid_argument("Triplet: value not finite");
  }
};

// An ordered, labelled collection of triplets sharing one ambient dimension.
struct TripletSet {
  std::vector<std::string> labels;
  std::vector<Triplet> items;

  int size() const { return static_cast<int>(items.size()); }
  int dimension() const { return items.empty() ? 0 : static_cast<int>(items.front().x.size()); }

  void push_back(std::string label, Triplet t) {
    if (!items.empty() && t.x.size() != dimension()) {
      throw std::invalid_argument("TripletSet: mixed dimensions");
    }
    for (const auto& l : labels) {
      if (l == label) throw std::invalid_argument("TripletSet: duplicate label " + label);
    }
    labels.push_back(std::move(label));
    items.push_back(std::move(t));
  }

  int index_of(const std::string& label) const {
    for (int i = 0; i < size(); ++i)
      if (labels[i] == label) return i;
    throw std::out_of_range("TripletSet: no label " + label);
  }
};

// Nonnegative weights on the unit simplex, one per triplet.
struct SimplexWeights {
  Vec alpha;

  bool valid(double tol = 1e-12) const {
    if (alpha.size() == 0) return false;
    if ((alpha.array() < -tol).any()) return false;
    return std::abs(alpha.sum() - 1.0) <= tol * std::max<double>(1, alpha.size());
  }
};

// JSON round-trip for triplet sets; the schema carries (mu, L) alongside
// labels/points/gradients/values.
struct TripletSetFile {
  ClassParams params;
  TripletSet set;
};

std::string triplet_set_to_json(const TripletSet& set, const ClassParams& params);
TripletSetFile triplet_set_from_json(const std::string& json_text);
TripletSetFile load_triplet_set(const std::string& path);
void save_triplet_set(const std::string& path, const TripletSet& set, const ClassParams& params);

}  // namespace ncgwc

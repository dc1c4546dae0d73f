#include "ncgwc/interpolation.hpp"

#include <limits>

namespace ncgwc {

Mat interpolation_residuals(const TripletSet& s, const ClassParams& p) {
  const int m = s.size();
  if (m < 2) throw std::invalid_argument("interpolation_residuals: need at least 2 triplets");
  const int n = s.dimension();
  for (const auto& t : s.items) {
    if (t.x.size() != n || t.g.size() != n) {
      throw std::invalid_argument("interpolation_residuals: dimension mismatch");
    }
  }
  const double q = p.q();
  const double scale = 1.0 / (2.0 * (1.0 - q));
  Mat r = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const Triplet& ti = s.items[i];
      const Triplet& tj = s.items[j];
      const Vec dx = ti.x - tj.x;
      const Vec dg = ti.g - tj.g;
      r(i, j) = ti.f - tj.f - tj.g.dot(dx) -
                scale * (dg.squaredNorm() / p.L + p.mu * dx.squaredNorm() - 2.0 * q * dg.dot(dx));
    }
  }
  return r;
}

double min_residual(const Mat& residuals) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < residuals.rows(); ++i)
    for (int j = 0; j < residuals.cols(); ++j)
      if (i != j) best = std::min(best, residuals(i, j));
  return best;
}

bool is_interpolable(const TripletSet& s, const ClassParams& p, double tol) {
  return min_residual(interpolation_residuals(s, p)) >= -tol;
}

}  // namespace ncgwc

#pragma once

#include "ncgwc/types.hpp"

namespace ncgwc {

// Default feasibility tolerance on interpolation residuals.
inline constexpr double kInterpFeasTol = 1e-6;

// Pairwise interpolation residuals for the class F_{mu,L}:
//   r(i,j) = f_i - f_j - <g_j, x_i - x_j>
//            - 1/(2(1-q)) * ( (1/L)||g_i-g_j||^2 + mu ||x_i-x_j||^2
//                             - 2(mu/L) <g_i-g_j, x_i-x_j> ).
// The set extends to some f in F_{mu,L} iff every off-diagonal entry is >= 0.
Mat interpolation_residuals(const TripletSet& s, const ClassParams& p);

// Smallest off-diagonal residual.
double min_residual(const Mat& residuals);

bool is_interpolable(const TripletSet& s, const ClassParams& p, double tol = kInterpFeasTol);

}  // namespace ncgwc

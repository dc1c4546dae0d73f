#pragma once

#include "ncgwc/qcqp.hpp"

namespace ncgwc {

// Algebra on affine selector vectors in the Gram coordinate system. A
// selector u picks a column of H (so x = H u); inner products of selected
// vectors become traces against G: <H u, H v> = u' G v = tr(G (u o v)) with
// o the symmetric outer product.

AffineVec unit_selector(int dim, int index);
AffineVec zero_selector(int dim);
// u + scale * v with constant scale
AffineVec add_scaled(const AffineVec& u, const AffineVec& v, double scale);
// u + var * v, v constant-entry selector (keeps entries affine)
AffineVec add_var_multiple(const AffineVec& u, const AffineVec& v, VarId var);
AffineVec subtract(const AffineVec& u, const AffineVec& v);

Vec eval_selector(const AffineVec& u, const Point& x);

// tr(G (u o v)) = u' G v as a QuadExpr over the G variables and any selector
// variables. Throws if both u and v carry variable entries in a product
// position (that term would be cubic; degree reduction must happen first).
QuadExpr tr_gram_outer(const GramLayout& gram, const AffineVec& u, const AffineVec& v);

// Entry (a,b) of the symmetric outer product u o v as a QuadExpr in the
// selector variables (used to pin degree-reduction duplicates).
QuadExpr outer_entry(const AffineVec& u, const AffineVec& v, int a, int b);

// f_j - f_i over the F variables (null var = the pinned-zero star value).
QuadExpr value_difference(VarId f_i, VarId f_j);

}  // namespace ncgwc

#pragma once

#include <array>
#include <span>

#include "rieszlab/grid.hpp"

namespace rieszlab {

using MultiIndex = std::array<int, kMaxDim>;

/// Node-sampled average of f over B(x, r) intersected with the grid box.
/// Summation runs in flat index order. Throws DegenerateBall for r < h.
double ball_average(const ScalarField& f, std::size_t node, double r);
/// Same, over |f|.
double ball_average_abs(const ScalarField& f, std::size_t node, double r);
/// Number of grid nodes in B(x, r).
std::size_t ball_count(const Grid& grid, std::size_t node, double r);

/// First derivative along one axis: central in the interior, one-sided
/// second-order stencils on the two boundary layers.
ScalarField partial(const ScalarField& f, int axis);

/// D^alpha f by iterated first differences. |alpha| <= 3.
ScalarField derivative(const ScalarField& f, const MultiIndex& alpha);

/// n-component gradient.
VectorField gradient(const ScalarField& f);

/// Derivative matrix of a vector field, stored as m*n components
/// (row c, column a at index c*n + a).
VectorField jacobian_matrix(const VectorField& phi);

/// Euclidean norm per node.
ScalarField vector_magnitude(const VectorField& F);

double lp_norm(const ScalarField& f, double p);
double lp_norm(const ScalarField& f, double p, const RegionMask& mask);

/// (sum_{|alpha| <= k} ||D^alpha f||_p^p)^{1/p}.
double sobolev_norm(const ScalarField& f, int k, double p);

/// Sum over |beta| <= k and components of ||D^beta F_c||_p^p (no root).
double sobolev_norm_pow(const VectorField& F, int k, double p);

struct PoincareSides {
  double lhs = 0.0;       ///< mean |f - f_B| over the ball
  double rhs_unit = 0.0;  ///< r * mean |grad f| over the ball
};

PoincareSides poincare_check(const ScalarField& f, std::size_t node, double r);
/// Variant reusing a precomputed |grad f|.
PoincareSides poincare_check(const ScalarField& f, const ScalarField& grad_norm, std::size_t node, double r);

/// Multilinear interpolation at a point inside the box (clamped).
double interpolate(const ScalarField& f, const Point& x);

}  // namespace rieszlab

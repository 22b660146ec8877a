#pragma once

#include <cstdint>
#include <vector>

#include "rieszlab/grid.hpp"

namespace rieszlab::gen {

/// r^gamma for r >= eps; inside, the even quartic eps^gamma (a + b t^2 + c t^4),
/// t = r / eps, matching value, slope and curvature at r = eps.
double singular_profile(double r, double gamma, double eps);

ScalarField constant(const Grid& grid, double value);
/// a . x + b.
ScalarField linear(const Grid& grid, const Point& a, double b = 0.0);
/// Smooth compactly supported bump exp(1 - 1 / (1 - |x - c|^2 / R^2)), peak 1.
ScalarField bump(const Grid& grid, const Point& center, double radius);
/// 1 where x_0 > 0, 1/2 where x_0 = 0, 0 elsewhere.
ScalarField half_space_indicator(const Grid& grid);
ScalarField box_indicator(const Grid& grid, const Point& lo, const Point& hi);
ScalarField ball_indicator(const Grid& grid, const Point& center, double radius);
/// singular_profile(|x - c|, gamma, eps).
ScalarField singular(const Grid& grid, const Point& center, double gamma, double eps);
/// sign(sin(1 / |x - c|)), 0 at the center node.
ScalarField oscillatory(const Grid& grid, const Point& center);
/// Sum of `terms` random Gaussians with seeded centers, widths and signs.
ScalarField random_smooth(const Grid& grid, std::uint64_t seed, int terms = 4);

VectorField identity_map(const Grid& grid);
/// x -> M x with M row-major n x n.
VectorField linear_map(const Grid& grid, const std::vector<double>& matrix);
/// x -> (x_0^2, x_1, ...).
VectorField fold(const Grid& grid);
/// x -> x + c * singular_profile(|x - z|) e_0.
VectorField singular_map(const Grid& grid, const Point& center, double gamma, double eps, double c);

}  // namespace rieszlab::gen

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rieszlab/capacity.hpp"
#include "rieszlab/generators.hpp"
#include "rieszlab/grid_ops.hpp"
#include "rieszlab/riesz.hpp"

using namespace rieszlab;

TEST_CASE("Newtonian kernel") {
  const KernelSpec s = KernelSpec::make(3, 2.0);
  CHECK(s.gamma == doctest::Approx(4 * std::numbers::pi).epsilon(1e-14));
  CHECK(std::abs(kernel_value(s, {1.0, 0, 0}) - 1.0 / (4 * std::numbers::pi)) <= 1e-10);
  CHECK_THROWS_AS(kernel_value(s, {0, 0, 0}), std::domain_error);
  CHECK_THROWS_AS(KernelSpec::make(2, 2.0), InputError);
}

TEST_CASE("kernel homogeneity and positivity") {
  const KernelSpec s = KernelSpec::make(2, 0.7);
  const Point x{0.3, -0.4, 0};
  for (double l : {0.5, 2.0, 7.0}) {
    const Point y{l * x[0], l * x[1], 0};
    CHECK(kernel_value(s, y) == doctest::Approx(std::pow(l, 0.7 - 2) * kernel_value(s, x)).epsilon(1e-14));
    CHECK(kernel_value(s, y) > 0.0);
  }
}

TEST_CASE("self-cell weight integrates the kernel") {
  // n = 1, alpha = 1/2: the ball of volume h is [-h/2, h/2].
  const KernelSpec s = KernelSpec::make(1, 0.5);
  const double h = 0.1;
  CHECK(s.self_cell_weight(h) == doctest::Approx(2.0 * std::pow(h / 2, 0.5) / (0.5 * s.gamma)).epsilon(1e-14));
}

TEST_CASE("potential of zero and of a point mass") {
  const Grid g = Grid::cube(2, 21, -1.0, 1.0);
  const KernelSpec s = KernelSpec::make(2, 0.5);
  CHECK(riesz_potential(ScalarField(g), s).max() == 0.0);
  ScalarField phi(g);
  const std::size_t c = g.ravel({10, 10, 0});
  phi[c] = 3.0;
  const ScalarField u = riesz_potential(phi, s, PotentialMethod::Direct);
  const std::size_t x = g.ravel({10, 14, 0});
  const Point d{0.0, 4 * g.spacing(), 0};
  CHECK(u[x] == doctest::Approx(3.0 * g.cell_volume() * kernel_value(s, d)).epsilon(0.01));
}

TEST_CASE("ball potential at the centre matches the radial integral") {
  const Grid g = Grid::cube(3, 61, -1.2, 1.2);
  const KernelSpec s = KernelSpec::make(3, 2.0);
  const ScalarField u = riesz_potential(gen::ball_indicator(g, {0, 0, 0}, 1.0), s);
  CHECK(u[g.ravel({30, 30, 30})] == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("direct and FFT convolution agree") {
  for (int n : {1, 2, 3}) {
    const Grid g = Grid::cube(n, n == 3 ? 9 : 23, -1.0, 1.0);
    const ScalarField phi = gen::random_smooth(g, 5);
    const KernelSpec s = KernelSpec::make(n, 0.6);
    const ScalarField a = riesz_potential(phi, s, PotentialMethod::Direct);
    const ScalarField b = riesz_potential(phi, s, PotentialMethod::Fft);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      num = std::max(num, std::abs(a[i] - b[i]));
      den = std::max(den, std::abs(a[i]));
    }
    CHECK(num / den <= 1e-8);
  }
}

TEST_CASE("potential is linear, monotone and translation covariant") {
  const Grid g = Grid::cube(2, 31, -1.0, 1.0);
  const KernelSpec s = KernelSpec::make(2, 1.0);
  const ScalarField a = gen::bump(g, {-0.2, 0.1, 0}, 0.3), b = gen::bump(g, {0.3, 0.0, 0}, 0.25);
  ScalarField ab(g);
  for (std::size_t i = 0; i < g.size(); ++i) ab[i] = 2 * a[i] + b[i];
  const ScalarField ua = riesz_potential(a, s), ub = riesz_potential(b, s), uab = riesz_potential(ab, s);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(uab[i] == doctest::Approx(2 * ua[i] + ub[i]).epsilon(1e-12));
    CHECK(uab[i] >= ua[i]);
  }
  const double h = g.spacing();
  const ScalarField shifted = gen::bump(g, {-0.2 + 3 * h, 0.1, 0}, 0.3);
  const ScalarField us = riesz_potential(shifted, s);
  for (std::size_t i = 0; i + 3 * g.stride(0) < g.size(); i += 7)
    CHECK(std::abs(us[i + 3 * g.stride(0)] - ua[i]) <= 1e-10);
}

TEST_CASE("derivative aggregate") {
  const Grid g = Grid::cube(2, 17, -1.0, 1.0);
  CHECK(derivative_aggregate(gen::linear(g, {1.0, -2.0, 0}), 2).max() < 1e-10);
  const Grid line = Grid::cube(1, 33, -1.0, 1.0);
  ScalarField sq(line);
  for (std::size_t i = 0; i < line.size(); ++i) sq[i] = std::pow(line.node(i)[0], 2);
  const ScalarField g2 = derivative_aggregate(sq, 2);
  for (std::size_t i = 2; i + 2 < line.size(); ++i) CHECK(g2[i] == doctest::Approx(2.0).epsilon(1e-10));
  const ScalarField f = gen::random_smooth(g, 8);
  const ScalarField agg = derivative_aggregate(f, 2);
  for (const auto& a : multi_indices(2, 2)) {
    const ScalarField d = derivative(f, a);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(agg[i] >= std::abs(d[i]) - 1e-12);
  }
}

TEST_CASE("bad point mask") {
  const Grid g = Grid::cube(2, 65, -1.0, 1.0);
  const KernelSpec s = KernelSpec::make(2, 1.0);
  const ScalarField smooth = gen::bump(g, {0, 0, 0}, 0.5);
  CHECK(bad_point_mask(smooth, 2, s, 2.0 * bad_point_potential(smooth, 2, s).max()).empty());
  const ScalarField f = gen::singular(g, {0, 0, 0}, 0.4, 2 * g.spacing());
  const ScalarField u = bad_point_potential(f, 2, s);
  std::vector<double> v(u.values().begin(), u.values().end());
  std::sort(v.begin(), v.end());
  const double T = v[static_cast<std::size_t>(0.98 * static_cast<double>(v.size() - 1))];
  const RegionMask E = bad_point_mask(f, 2, s, T);
  CHECK(E[g.ravel({32, 32, 0})]);
  // The mollified gradient vanishes at the centre, so the potential peaks
  // on a ring about 2h out rather than at the centre node.
  CHECK(u[g.ravel({34, 32, 0})] > u[g.ravel({32, 32, 0})]);
  CHECK(bad_point_mask(f, 2, s, 2 * T).subset_of(E));
  CHECK_THROWS_AS(bad_point_mask(f, 2, KernelSpec::make(2, 0.5), T), InputError);
}

TEST_CASE("telescoping identity") {
  const Grid g = Grid::cube(2, 33, -1.0, 1.0);
  const std::size_t mid = g.ravel({16, 16, 0});
  CHECK(telescoping_identity_check(ScalarField(g, 1.5), mid, 0.5, 0.25).residual <= 1e-12);
  CHECK_THROWS_AS(telescoping_identity_check(ScalarField(g, 1.5), mid, 0.25, 0.5), InputError);

  std::vector<double> hs, res;
  for (std::size_t N : {33, 65, 129}) {
    const Grid gr = Grid::cube(2, N, -1.0, 1.0);
    const ScalarField f = gen::random_smooth(gr, 1);
    const TelescopingSides t = telescoping_identity_check(f, gr.ravel(gr.nearest({0, 0, 0})), 0.5, 0.25);
    hs.push_back(gr.spacing());
    res.push_back(t.residual);
    if (N == 129) CHECK(t.residual <= 0.05 * std::abs(t.lhs));
  }
  CHECK(log_log_slope(hs, res) >= 0.9);
}

TEST_CASE("kernel inequality") {
  const Grid g = Grid::cube(3, 17, -1.0, 1.0);
  const auto zero = kernel_inequality_check(ScalarField(g), 1, 1.0, g.ravel({8, 8, 8}));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs_unit == 0.0);

  std::vector<double> ratios;
  for (std::size_t N : {17, 25, 33}) {
    const Grid gr = Grid::cube(3, N, -1.0, 1.0);
    const auto q = kernel_inequality_check(gen::bump(gr, {0, 0, 0}, 0.7), 1, 1.0, gr.ravel(gr.nearest({0.1, 0, 0})));
    ratios.push_back(q.lhs / q.rhs_unit);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi / *lo <= 1.2 / 0.8);

  const Grid t = Grid::cube(2, 41, -1.0, 1.0);
  const double h = t.spacing();
  const auto a = kernel_inequality_check(gen::bump(t, {-0.1, 0, 0}, 0.4), 1, 0.5, t.ravel({18, 20, 0}));
  const auto b = kernel_inequality_check(gen::bump(t, {-0.1 + 4 * h, 0, 0}, 0.4), 1, 0.5, t.ravel({22, 20, 0}));
  CHECK(std::abs(a.lhs - b.lhs) <= 1e-10 * a.lhs);
  CHECK(std::abs(a.rhs_unit - b.rhs_unit) <= 1e-10 * a.rhs_unit);
}

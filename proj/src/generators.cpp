#include "rieszlab/generators.hpp"

#include <cmath>
#include <random>

namespace rieszlab::gen {

namespace {

template <typename F>
ScalarField sample(const Grid& grid, F&& f) {
  ScalarField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
  return out;
}

template <typename F>
VectorField sample_map(const Grid& grid, F&& f) {
  const int n = grid.dim();
  VectorField out(grid, n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point y = f(grid.node(i));
    for (int c = 0; c < n; ++c) out.at(i, c) = y[c];
  }
  return out;
}

}  // namespace

double singular_profile(double r, double gamma, double eps) {
  if (r >= eps) return std::pow(r, gamma);
  const double c = gamma * (gamma - 2.0) / 8.0;
  const double b = 0.5 * gamma - 2.0 * c;
  const double a = 1.0 - b - c;
  const double t2 = (r / eps) * (r / eps);
  return std::pow(eps, gamma) * (a + t2 * (b + c * t2));
}

ScalarField constant(const Grid& grid, double value) { return ScalarField(grid, value); }

ScalarField linear(const Grid& grid, const Point& a, double b) {
  return sample(grid, [&](const Point& x) {
    double s = b;
    for (int i = 0; i < grid.dim(); ++i) s += a[i] * x[i];
    return s;
  });
}

ScalarField bump(const Grid& grid, const Point& center, double radius) {
  return sample(grid, [&](const Point& x) {
    const double q = distance(x, center, grid.dim()) / radius;
    return q < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - q * q)) : 0.0;
  });
}

ScalarField half_space_indicator(const Grid& grid) {
  return sample(grid, [](const Point& x) { return x[0] > 0.0 ? 1.0 : (x[0] == 0.0 ? 0.5 : 0.0); });
}

ScalarField box_indicator(const Grid& grid, const Point& lo, const Point& hi) {
  return sample(grid, [&](const Point& x) {
    for (int i = 0; i < grid.dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return 0.0;
    return 1.0;
  });
}

ScalarField ball_indicator(const Grid& grid, const Point& center, double radius) {
  return sample(grid, [&](const Point& x) { return distance(x, center, grid.dim()) <= radius ? 1.0 : 0.0; });
}

ScalarField singular(const Grid& grid, const Point& center, double gamma, double eps) {
  return sample(grid, [&](const Point& x) { return singular_profile(distance(x, center, grid.dim()), gamma, eps); });
}

ScalarField oscillatory(const Grid& grid, const Point& center) {
  return sample(grid, [&](const Point& x) {
    const double r = distance(x, center, grid.dim());
    if (r == 0.0) return 0.0;
    const double s = std::sin(1.0 / r);
    return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
  });
}

ScalarField random_smooth(const Grid& grid, std::uint64_t seed, int terms) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = grid.dim();
  struct Term {
    Point c;
    double w, a;
  };
  std::vector<Term> ts;
  for (int t = 0; t < terms; ++t) {
    Term term{{0, 0, 0}, 0, 0};
    for (int i = 0; i < n; ++i) {
      const double lo = grid.origin()[i];
      const double len = grid.spacing() * static_cast<double>(grid.extent(i) - 1);
      term.c[i] = lo + len * (0.2 + 0.6 * unit(rng));
    }
    term.w = grid.diameter() * (0.08 + 0.17 * unit(rng));
    term.a = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unit(rng));
    ts.push_back(term);
  }
  return sample(grid, [&](const Point& x) {
    double s = 0.0;
    for (const auto& t : ts) {
      const double d = distance(x, t.c, n) / t.w;
      s += t.a * std::exp(-d * d);
    }
    return s;
  });
}

VectorField identity_map(const Grid& grid) {
  return sample_map(grid, [](const Point& x) { return x; });
}

VectorField linear_map(const Grid& grid, const std::vector<double>& matrix) {
  const int n = grid.dim();
  if (matrix.size() != static_cast<std::size_t>(n * n)) throw InputError("linear map needs an n x n matrix");
  return sample_map(grid, [&](const Point& x) {
    Point y{0, 0, 0};
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) y[r] += matrix[static_cast<std::size_t>(r * n + c)] * x[c];
    return y;
  });
}

VectorField fold(const Grid& grid) {
  return sample_map(grid, [](Point x) {
    x[0] = x[0] * x[0];
    return x;
  });
}

VectorField singular_map(const Grid& grid, const Point& center, double gamma, double eps, double c) {
  return sample_map(grid, [&](Point x) {
    x[0] += c * singular_profile(distance(x, center, grid.dim()), gamma, eps);
    return x;
  });
}

}  // namespace rieszlab::gen

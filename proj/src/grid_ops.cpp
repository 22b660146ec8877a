#include "rieszlab/grid_ops.hpp"

#include <cmath>
#include <sstream>

#include "rieszlab/parallel.hpp"

namespace rieszlab {

namespace {

int g_threads = 1;

template <typename Visit>
void for_ball(const Grid& grid, std::size_t node, double r, Visit&& visit) {
  const double h = grid.spacing();
  if (!(r >= h * (1.0 - 1e-12)) || !std::isfinite(r)) throw DegenerateBall();
  const NodeIndex c = grid.unravel(node);
  for (const auto& o : ball_offsets(grid.dim(), r / h)) {
    NodeIndex q{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
    if (grid.contains(q)) visit(grid.ravel(q));
  }
}

}  // namespace

void set_thread_count(int threads) { g_threads = std::max(1, threads); }
int thread_count() { return g_threads; }

double ball_average(const ScalarField& f, std::size_t node, double r) {
  double sum = 0.0;
  std::size_t n = 0;
  for_ball(f.grid(), node, r, [&](std::size_t j) {
    sum += f[j];
    ++n;
  });
  return sum / static_cast<double>(n);
}

double ball_average_abs(const ScalarField& f, std::size_t node, double r) {
  double sum = 0.0;
  std::size_t n = 0;
  for_ball(f.grid(), node, r, [&](std::size_t j) {
    sum += std::abs(f[j]);
    ++n;
  });
  return sum / static_cast<double>(n);
}

std::size_t ball_count(const Grid& grid, std::size_t node, double r) {
  std::size_t n = 0;
  for_ball(grid, node, r, [&](std::size_t) { ++n; });
  return n;
}

ScalarField partial(const ScalarField& f, int axis) {
  const Grid& g = f.grid();
  if (axis < 0 || axis >= g.dim()) throw InputError("derivative axis out of range");
  const std::size_t len = g.extent(axis);
  const std::size_t stride = g.stride(axis);
  const double inv2h = 1.0 / (2.0 * g.spacing());
  ScalarField out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto pos = static_cast<std::size_t>(g.unravel(i)[axis]);
    double d;
    if (pos == 0) {
      d = (-3.0 * f[i] + 4.0 * f[i + stride] - f[i + 2 * stride]) * inv2h;
    } else if (pos == len - 1) {
      d = (3.0 * f[i] - 4.0 * f[i - stride] + f[i - 2 * stride]) * inv2h;
    } else {
      d = (f[i + stride] - f[i - stride]) * inv2h;
    }
    out[i] = d;
  }
  return out;
}

ScalarField derivative(const ScalarField& f, const MultiIndex& alpha) {
  int order = 0;
  for (int a = 0; a < kMaxDim; ++a) {
    if (alpha[a] < 0) throw InputError("negative multi-index entry");
    if (a >= f.grid().dim() && alpha[a] != 0) throw InputError("multi-index exceeds grid dimension");
    order += alpha[a];
  }
  if (order > 3) {
    std::ostringstream os;
    os << "derivative order " << order << " exceeds supported order 3";
    throw InputError(os.str());
  }
  ScalarField out = f;
  for (int a = 0; a < f.grid().dim(); ++a)
    for (int t = 0; t < alpha[a]; ++t) out = partial(out, a);
  return out;
}

VectorField gradient(const ScalarField& f) {
  const int n = f.grid().dim();
  VectorField out(f.grid(), n);
  for (int a = 0; a < n; ++a) {
    ScalarField d = partial(f, a);
    for (std::size_t i = 0; i < f.size(); ++i) out.at(i, a) = d[i];
  }
  return out;
}

VectorField jacobian_matrix(const VectorField& phi) {
  const int n = phi.grid().dim();
  const int m = phi.components();
  VectorField out(phi.grid(), m * n);
  for (int c = 0; c < m; ++c) {
    ScalarField comp = phi.component(c);
    for (int a = 0; a < n; ++a) {
      ScalarField d = partial(comp, a);
      for (std::size_t i = 0; i < d.size(); ++i) out.at(i, c * n + a) = d[i];
    }
  }
  return out;
}

ScalarField vector_magnitude(const VectorField& F) {
  ScalarField out(F.grid());
  const int m = F.components();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (m == 1) {
      out[i] = std::abs(F.at(i, 0));
      continue;
    }
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += F.at(i, c) * F.at(i, c);
    out[i] = std::sqrt(s);
  }
  return out;
}

namespace {
double lp_sum(const ScalarField& f, double p, const RegionMask* mask) {
  if (!(p >= 1.0)) throw InputError("p must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double v = std::abs(f[i]);
    s += p == 1.0 ? v : (p == 2.0 ? v * v : std::pow(v, p));
  }
  return s * f.grid().cell_volume();
}
}  // namespace

double lp_norm(const ScalarField& f, double p) { return std::pow(lp_sum(f, p, nullptr), 1.0 / p); }

double lp_norm(const ScalarField& f, double p, const RegionMask& mask) {
  if (mask.grid() != f.grid()) throw InputError("mask grid differs from field grid");
  return std::pow(lp_sum(f, p, &mask), 1.0 / p);
}

double sobolev_norm(const ScalarField& f, int k, double p) {
  if (k < 0 || k > 3) throw InputError("sobolev order must be in [0, 3]");
  double total = 0.0;
  for (int j = 0; j <= k; ++j)
    for (const auto& alpha : multi_indices(f.grid().dim(), j)) total += lp_sum(derivative(f, alpha), p, nullptr);
  return std::pow(total, 1.0 / p);
}

double sobolev_norm_pow(const VectorField& F, int k, double p) {
  double total = 0.0;
  for (int c = 0; c < F.components(); ++c) {
    ScalarField comp = F.component(c);
    for (int j = 0; j <= k; ++j)
      for (const auto& alpha : multi_indices(F.grid().dim(), j)) total += lp_sum(derivative(comp, alpha), p, nullptr);
  }
  return total;
}

PoincareSides poincare_check(const ScalarField& f, const ScalarField& grad_norm, std::size_t node, double r) {
  const double mean = ball_average(f, node, r);
  double dev = 0.0, grad = 0.0;
  std::size_t n = 0;
  for_ball(f.grid(), node, r, [&](std::size_t j) {
    dev += std::abs(f[j] - mean);
    grad += grad_norm[j];
    ++n;
  });
  return {dev / static_cast<double>(n), r * grad / static_cast<double>(n)};
}

PoincareSides poincare_check(const ScalarField& f, std::size_t node, double r) {
  return poincare_check(f, vector_magnitude(gradient(f)), node, r);
}

double interpolate(const ScalarField& f, const Point& x) {
  const Grid& g = f.grid();
  const int n = g.dim();
  std::array<std::ptrdiff_t, kMaxDim> base{0, 0, 0};
  std::array<double, kMaxDim> t{0.0, 0.0, 0.0};
  for (int a = 0; a < n; ++a) {
    const double u = (x[a] - g.origin()[a]) / g.spacing();
    const auto last = static_cast<std::ptrdiff_t>(g.extent(a)) - 2;
    auto b = static_cast<std::ptrdiff_t>(std::floor(u));
    b = std::clamp<std::ptrdiff_t>(b, 0, last);
    base[a] = b;
    t[a] = std::clamp(u - static_cast<double>(b), 0.0, 1.0);
  }
  double v = 0.0;
  const int corners = 1 << n;
  for (int c = 0; c < corners; ++c) {
    NodeIndex q{base[0], base[1], base[2]};
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const int bit = (c >> a) & 1;
      q[a] += bit;
      w *= bit ? t[a] : 1.0 - t[a];
    }
    if (w != 0.0) v += w * f[g.ravel(q)];
  }
  return v;
}

}  // namespace rieszlab

#include "rieszlab/maximal.hpp"

#include <algorithm>
#include <cmath>

#include "rieszlab/parallel.hpp"

namespace rieszlab {

RadiusLadder::RadiusLadder(double first, double ratio, double max_radius) : ratio_(ratio) {
  if (!(first > 0.0)) throw InputError("ladder must start at a positive radius");
  if (!(ratio > 1.0 && ratio <= 2.0)) throw InputError("ladder ratio must lie in (1, 2]");
  double r = first;
  radii_.push_back(r);
  while (r < max_radius) {
    r *= ratio;
    radii_.push_back(r);
  }
}

RadiusLadder::RadiusLadder(std::vector<double> radii) : radii_(std::move(radii)) {
  if (radii_.empty()) throw InputError("empty radius ladder");
  for (double r : radii_)
    if (!(r > 0.0)) throw InputError("ladder radii must be positive");
  if (radii_.size() > 1) ratio_ = radii_[1] / radii_[0];
}

RadiusLadder RadiusLadder::for_grid(const Grid& grid, double ratio) {
  return RadiusLadder(grid.spacing(), ratio, grid.diameter());
}

namespace {

// Ball sums via prefix sums along the contiguous last axis: a ball is a
// stack of row segments, one per offset in the remaining axes.
struct RowPrefix {
  std::size_t len = 0;    // nodes per row
  std::size_t lines = 0;  // number of rows
  std::vector<double> prefix;  // lines * (len + 1)

  RowPrefix(const Grid& g, const ScalarField& f) {
    len = g.extent(g.dim() - 1);
    lines = g.size() / len;
    prefix.assign(lines * (len + 1), 0.0);
    for (std::size_t l = 0; l < lines; ++l) {
      double s = 0.0;
      double* row = &prefix[l * (len + 1)];
      for (std::size_t k = 0; k < len; ++k) {
        s += std::abs(f[l * len + k]);
        row[k + 1] = s;
      }
    }
  }
};

struct RowOffset {
  std::ptrdiff_t o0 = 0, o1 = 0;  // offsets along the non-row axes
  std::ptrdiff_t half = 0;        // half-width along the row axis
};

std::vector<RowOffset> row_offsets(int dim, double radius_in_h) {
  std::vector<RowOffset> rows;
  const auto reach = static_cast<std::ptrdiff_t>(std::floor(radius_in_h + 1e-9));
  const double r2 = radius_in_h * radius_in_h * (1.0 + 1e-12) + 1e-12;
  const std::ptrdiff_t ra = dim >= 2 ? reach : 0;
  const std::ptrdiff_t rb = dim >= 3 ? reach : 0;
  for (std::ptrdiff_t a = -ra; a <= ra; ++a)
    for (std::ptrdiff_t b = -rb; b <= rb; ++b) {
      const double d2 = static_cast<double>(a * a + b * b);
      if (d2 > r2) continue;
      auto half = static_cast<std::ptrdiff_t>(std::floor(std::sqrt(r2 - d2) + 1e-9));
      rows.push_back({a, b, half});
    }
  return rows;
}

}  // namespace

ScalarField maximal_function(const ScalarField& f, const RadiusLadder& ladder) {
  const Grid& g = f.grid();
  const int n = g.dim();
  RowPrefix pre(g, f);
  std::vector<std::vector<RowOffset>> per_radius;
  for (double r : ladder.radii()) per_radius.push_back(row_offsets(n, r / g.spacing()));

  ScalarField out(g);
  const auto len = static_cast<std::ptrdiff_t>(pre.len);
  parallel_for(g.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const NodeIndex c = g.unravel(i);
      // Split the node index into (line coordinates, position along row).
      std::ptrdiff_t u0 = 0, u1 = 0, k = 0;
      if (n == 1) {
        k = c[0];
      } else if (n == 2) {
        u0 = c[0];
        k = c[1];
      } else {
        u0 = c[0];
        u1 = c[1];
        k = c[2];
      }
      double best = 0.0;
      for (const auto& rows : per_radius) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& ro : rows) {
          std::ptrdiff_t a = u0 + ro.o0, b = u1 + ro.o1;
          std::size_t line;
          if (n == 1) {
            line = 0;
          } else if (n == 2) {
            if (a < 0 || a >= static_cast<std::ptrdiff_t>(g.extent(0))) continue;
            line = static_cast<std::size_t>(a);
          } else {
            if (a < 0 || a >= static_cast<std::ptrdiff_t>(g.extent(0))) continue;
            if (b < 0 || b >= static_cast<std::ptrdiff_t>(g.extent(1))) continue;
            line = static_cast<std::size_t>(a) * g.extent(1) + static_cast<std::size_t>(b);
          }
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, k - ro.half);
          const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len - 1, k + ro.half);
          const double* row = &pre.prefix[line * (pre.len + 1)];
          sum += row[hi + 1] - row[lo];
          count += static_cast<std::size_t>(hi - lo + 1);
        }
        best = std::max(best, sum / static_cast<double>(count));
      }
      out[i] = best;
    }
  });
  return out;
}

RegionMask sublevel_set(const ScalarField& Mf, double lambda) {
  if (!(lambda > 0.0)) throw InputError("sublevel threshold must be positive");
  RegionMask out(Mf.grid());
  for (std::size_t i = 0; i < Mf.size(); ++i) out.set(i, Mf[i] <= lambda);
  return out;
}

RegionMask superlevel_set(const ScalarField& Mf, double lambda) { return ~sublevel_set(Mf, lambda); }

}  // namespace rieszlab

#include "rieszlab/area.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rieszlab/grid_ops.hpp"
#include "rieszlab/parallel.hpp"

namespace rieszlab {

namespace {

std::vector<std::size_t> corner_offsets(const Grid& g) {
  std::vector<std::size_t> out;
  const int n = g.dim();
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::size_t off = 0;
    for (int a = 0; a < n; ++a)
      if (mask & (1 << a)) off += g.stride(a);
    out.push_back(off);
  }
  return out;
}

double det(const VectorField& D, std::size_t i, int n) {
  auto d = [&](int r, int c) { return D.at(i, r * n + c); };
  switch (n) {
    case 1:
      return d(0, 0);
    case 2:
      return d(0, 0) * d(1, 1) - d(0, 1) * d(1, 0);
    default:
      return d(0, 0) * (d(1, 1) * d(2, 2) - d(1, 2) * d(2, 1)) - d(0, 1) * (d(1, 0) * d(2, 2) - d(1, 2) * d(2, 0)) +
             d(0, 2) * (d(1, 0) * d(2, 1) - d(1, 1) * d(2, 0));
  }
}

void check_mapping(const VectorField& phi) {
  if (phi.components() != phi.grid().dim()) throw InputError("jacobian requires m = n");
}

struct YGrid {
  int dim = 1;
  double hy = 0.0;
  std::array<double, kMaxDim> start{0, 0, 0};
  std::array<std::size_t, kMaxDim> count{1, 1, 1};
  std::size_t size() const { return count[0] * count[1] * count[2]; }
  double coord(int a, std::ptrdiff_t k) const { return start[a] + static_cast<double>(k) * hy; }
};

struct Leaf {
  std::size_t y = 0;
  Point x{0, 0, 0};
  std::size_t cell = 0;
  bool degenerate = false;
};

struct Cluster {
  Point center{0, 0, 0};
  std::size_t first_cell = 0;
};

class PreimageCounter {
 public:
  PreimageCounter(const VectorField& phi, const RegionMask& cells, const AreaOptions& options)
      : phi_(phi), g_(phi.grid()), n_(g_.dim()), opt_(options), corners_(corner_offsets(g_)) {
    check_mapping(phi);
    if (n_ > 2) throw InputError("preimage counting supports n in {1, 2}");
    cells_ = cells.indices();
  }

  const std::vector<std::size_t>& cells() const { return cells_; }

  // Corner values phi_c at corner k (corner bit a = offset along axis a).
  std::array<std::array<double, 2>, 4> corners(std::size_t cell) const {
    std::array<std::array<double, 2>, 4> v{};
    for (std::size_t k = 0; k < corners_.size(); ++k)
      for (int c = 0; c < n_; ++c) v[k][c] = phi_.at(cell + corners_[k], c);
    return v;
  }

  // Appends the leaves of one (cell, y) pair; returns false on a continuum.
  bool leaves(std::size_t cell, const Point& y, std::vector<Point>& out) const {
    const auto v = corners(cell);
    const Point base = g_.node(cell);
    const double h = g_.spacing();
    const double tol = 1e-13 * (1.0 + std::abs(y[0]) + std::abs(y[1]));
    if (n_ == 1) {
      const double g0 = v[0][0] - y[0], g1 = v[1][0] - y[0];
      if (g0 == 0.0 && g1 == 0.0) return false;
      if ((g0 <= 0.0 && g1 >= 0.0) || (g0 >= 0.0 && g1 <= 0.0)) {
        // Root of the linear interpolant; bisection would converge to it.
        const double t = g0 / (g0 - g1);
        out.push_back({base[0] + t * h, 0.0, 0.0});
      }
      return true;
    }
    auto eval = [&](double u, double w, int c) {
      return (1 - u) * (1 - w) * v[0][c] + u * (1 - w) * v[1][c] + (1 - u) * w * v[2][c] + u * w * v[3][c];
    };
    struct Sub {
      double u, w, s;
    };
    std::vector<Sub> stack{{0.0, 0.0, 1.0}};
    std::size_t found = 0;
    while (!stack.empty()) {
      const Sub q = stack.back();
      stack.pop_back();
      bool inside = true;
      for (int c = 0; c < 2 && inside; ++c) {
        const double a = eval(q.u, q.w, c), b = eval(q.u + q.s, q.w, c), d = eval(q.u, q.w + q.s, c),
                     e = eval(q.u + q.s, q.w + q.s, c);
        const double lo = std::min({a, b, d, e}), hi = std::max({a, b, d, e});
        inside = y[c] >= lo - tol && y[c] <= hi + tol;
      }
      if (!inside) continue;
      if (q.s <= opt_.subdivision_floor) {
        if (++found > opt_.leaf_limit) return false;
        out.push_back({base[0] + (q.u + 0.5 * q.s) * h, base[1] + (q.w + 0.5 * q.s) * h, 0.0});
        continue;
      }
      const double s = 0.5 * q.s;
      // Pushed in reverse so children pop in lexicographic order.
      stack.push_back({q.u + s, q.w + s, s});
      stack.push_back({q.u + s, q.w, s});
      stack.push_back({q.u, q.w + s, s});
      stack.push_back({q.u, q.w, s});
    }
    return true;
  }

  YGrid y_grid() const {
    YGrid yg;
    yg.dim = n_;
    yg.hy = opt_.hy > 0.0 ? opt_.hy : g_.spacing();
    if (cells_.empty()) {
      yg.count = {0, 1, 1};
      return yg;
    }
    for (int c = 0; c < n_; ++c) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t cell : cells_)
        for (std::size_t off : corners_) {
          lo = std::min(lo, phi_.at(cell + off, c));
          hi = std::max(hi, phi_.at(cell + off, c));
        }
      const auto cnt = static_cast<std::size_t>(std::ceil((hi - lo) / yg.hy - 1e-9)) + 2;
      yg.count[c] = cnt;
      yg.start[c] = 0.5 * (lo + hi) - 0.5 * static_cast<double>(cnt - 1) * yg.hy;
    }
    return yg;
  }

  // All leaves for every y-sample of the grid, grouped by y-sample.
  std::vector<Leaf> all_leaves(const YGrid& yg) const {
    std::vector<std::vector<Leaf>> per_cell(cells_.size());
    parallel_for(cells_.size(), [&](std::size_t begin, std::size_t end) {
      std::vector<Point> pts;
      for (std::size_t ci = begin; ci < end; ++ci) {
        const std::size_t cell = cells_[ci];
        const auto v = corners(cell);
        std::array<std::ptrdiff_t, 2> klo{0, 0}, khi{0, 0};
        bool any = true;
        for (int c = 0; c < n_; ++c) {
          double lo = v[0][c], hi = v[0][c];
          for (std::size_t k = 1; k < corners_.size(); ++k) {
            lo = std::min(lo, v[k][c]);
            hi = std::max(hi, v[k][c]);
          }
          klo[c] = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil((lo - yg.start[c]) / yg.hy - 1e-9)));
          khi[c] = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(yg.count[c]) - 1,
                                            static_cast<std::ptrdiff_t>(std::floor((hi - yg.start[c]) / yg.hy + 1e-9)));
          if (klo[c] > khi[c]) any = false;
        }
        if (!any) continue;
        const std::ptrdiff_t k1lo = n_ == 2 ? klo[1] : 0, k1hi = n_ == 2 ? khi[1] : 0;
        for (std::ptrdiff_t k0 = klo[0]; k0 <= khi[0]; ++k0)
          for (std::ptrdiff_t k1 = k1lo; k1 <= k1hi; ++k1) {
            const Point y{yg.coord(0, k0), n_ == 2 ? yg.coord(1, k1) : 0.0, 0.0};
            const std::size_t yi = static_cast<std::size_t>(k0) * yg.count[1] + static_cast<std::size_t>(k1);
            pts.clear();
            if (!leaves(cell, y, pts)) {
              per_cell[ci].push_back({yi, {0, 0, 0}, cell, true});
              continue;
            }
            for (const Point& p : pts) per_cell[ci].push_back({yi, p, cell, false});
          }
      }
    });
    std::vector<Leaf> out;
    for (auto& v : per_cell) out.insert(out.end(), v.begin(), v.end());
    std::stable_sort(out.begin(), out.end(), [](const Leaf& a, const Leaf& b) { return a.y < b.y; });
    return out;
  }

  // Single-linkage clusters of leaves [begin, end) within the merge radius.
  // `cell_rank` orders cells (e.g. by exhaustion level); each cluster keeps
  // the leaf cell of lowest rank.
  template <typename Rank>
  std::vector<Cluster> cluster(const std::vector<Leaf>& leaves, std::size_t begin, std::size_t end,
                               Rank&& cell_rank) const {
    const double radius = opt_.merge_radius * g_.spacing();
    const std::size_t m = end - begin;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return leaves[begin + a].x[0] < leaves[begin + b].x[0]; });
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (std::size_t i = 0; i < m; ++i) {
      const Point& a = leaves[begin + order[i]].x;
      for (std::size_t j = i + 1; j < m; ++j) {
        const Point& b = leaves[begin + order[j]].x;
        if (b[0] - a[0] > radius) break;
        if (distance(a, b, n_) <= radius) {
          const std::size_t ra = find(order[i]), rb = find(order[j]);
          if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
        }
      }
    }
    std::vector<Cluster> out;
    std::vector<std::size_t> slot(m, m), count;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = find(i);
      if (slot[r] == m) {
        slot[r] = out.size();
        out.push_back({{0, 0, 0}, leaves[begin + i].cell});
        count.push_back(0);
      }
      Cluster& c = out[slot[r]];
      for (int a = 0; a < n_; ++a) c.center[a] += leaves[begin + i].x[a];
      if (cell_rank(leaves[begin + i].cell) < cell_rank(c.first_cell)) c.first_cell = leaves[begin + i].cell;
      ++count[slot[r]];
    }
    for (std::size_t k = 0; k < out.size(); ++k)
      for (int a = 0; a < n_; ++a) out[k].center[a] /= static_cast<double>(count[k]);
    return out;
  }

 private:
  const VectorField& phi_;
  const Grid& g_;
  int n_;
  AreaOptions opt_;
  std::vector<std::size_t> corners_;
  std::vector<std::size_t> cells_;
};

void check_weight(const ScalarField& f, const RegionMask& mask, const Grid& g) {
  if (f.grid() != g || mask.grid() != g) throw InputError("mapping, weight and mask grids differ");
  for (std::size_t i = 0; i < f.size(); ++i)
    if (mask[i] && f[i] < 0.0) throw InputError("weight must be nonnegative on the domain");
}

}  // namespace

ScalarField jacobian(const VectorField& phi) {
  check_mapping(phi);
  const VectorField D = jacobian_matrix(phi);
  const int n = phi.grid().dim();
  ScalarField J(phi.grid());
  for (std::size_t i = 0; i < J.size(); ++i) J[i] = det(D, i, n);
  return J;
}

RegionMask cell_mask(const RegionMask& mask) {
  const Grid& g = mask.grid();
  const auto offs = corner_offsets(g);
  RegionMask out(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const NodeIndex c = g.unravel(i);
    bool ok = true;
    for (int a = 0; a < g.dim() && ok; ++a)
      if (static_cast<std::size_t>(c[a]) + 1 >= g.extent(a)) ok = false;
    for (std::size_t k = 0; k < offs.size() && ok; ++k)
      if (!mask[i + offs[k]]) ok = false;
    if (ok) out.set(i, true);
  }
  return out;
}

namespace {

std::vector<double> cell_contributions(const VectorField& phi, const ScalarField& f, const std::vector<std::size_t>& cells) {
  const ScalarField J = jacobian(phi);
  const Grid& g = phi.grid();
  const auto offs = corner_offsets(g);
  const double w = g.cell_volume() / static_cast<double>(offs.size());
  std::vector<double> out(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    double s = 0.0;
    for (std::size_t off : offs) s += f[cells[k] + off] * std::abs(J[cells[k] + off]);
    out[k] = s * w;
  }
  return out;
}

}  // namespace

double lhs_integral(const VectorField& phi, const ScalarField& f, const RegionMask& mask) {
  check_mapping(phi);
  check_weight(f, mask, phi.grid());
  const auto contrib = cell_contributions(phi, f, cell_mask(mask).indices());
  double s = 0.0;
  for (double c : contrib) s += c;
  return s;
}

MultiplicityResult multiplicity(const VectorField& phi, const ScalarField& f, const Point& y, const RegionMask& mask,
                                const AreaOptions& options) {
  check_mapping(phi);
  check_weight(f, mask, phi.grid());
  PreimageCounter counter(phi, cell_mask(mask), options);
  std::vector<Leaf> leaves;
  std::vector<Point> pts;
  MultiplicityResult res;
  for (std::size_t cell : counter.cells()) {
    pts.clear();
    if (!counter.leaves(cell, y, pts)) {
      res.degenerate = true;
      continue;
    }
    for (const Point& p : pts) leaves.push_back({0, p, cell, false});
  }
  if (res.degenerate) return res;
  const auto clusters = counter.cluster(leaves, 0, leaves.size(), [](std::size_t c) { return c; });
  for (const auto& c : clusters) res.value += interpolate(f, c.center);
  res.preimages = clusters.size();
  return res;
}

AreaFormulaReport verify_area_formula(const MappingProblem& problem, const AreaOptions& options) {
  const VectorField& phi = problem.phi;
  const Grid& g = phi.grid();
  check_mapping(phi);
  RegionMask mask = problem.domain;
  if (problem.removed.size() > 0) {
    if (problem.removed.grid() != g) throw InputError("removed set grid differs from mapping grid");
    mask = mask - problem.removed;
  }
  check_weight(problem.weight, mask, g);

  const RegionMask cells_mask = cell_mask(mask);
  PreimageCounter counter(phi, cells_mask, options);
  const auto& cells = counter.cells();
  const int n = g.dim();

  // Exhaustion level per cell; cells outside every A_m get rank `levels`.
  const std::size_t levels = problem.exhaustion.size();
  std::vector<std::size_t> rank(g.size(), levels);
  for (std::size_t m = levels; m-- > 0;) {
    if (problem.exhaustion[m].grid() != g) throw InputError("exhaustion mask grid differs from mapping grid");
    const RegionMask cm = cell_mask(problem.exhaustion[m]);
    for (std::size_t c : cells)
      if (cm[c]) rank[c] = m;
  }

  AreaFormulaReport rep;
  rep.merge_radius = options.merge_radius * g.spacing();
  const auto contrib = cell_contributions(phi, problem.weight, cells);
  std::vector<double> lhs_level(levels, 0.0);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    rep.lhs += contrib[k];
    if (rank[cells[k]] < levels) lhs_level[rank[cells[k]]] += contrib[k];
  }

  const YGrid yg = counter.y_grid();
  rep.hy = yg.hy;
  rep.y_samples = yg.size();
  const double vol_y = std::pow(yg.hy, n);
  const std::vector<Leaf> leaves = counter.all_leaves(yg);
  std::vector<double> rhs_level(levels, 0.0);
  std::size_t hit_samples = 0;
  std::size_t zero_samples = yg.size();
  for (std::size_t b = 0; b < leaves.size();) {
    std::size_t e = b;
    bool degenerate = false;
    while (e < leaves.size() && leaves[e].y == leaves[b].y) degenerate |= leaves[e++].degenerate;
    --zero_samples;
    if (degenerate) {
      ++rep.degenerate_samples;
      b = e;
      continue;
    }
    const auto clusters = counter.cluster(leaves, b, e, [&](std::size_t c) { return rank[c]; });
    double N = 0.0;
    for (const auto& c : clusters) {
      const double v = interpolate(problem.weight, c.center);
      N += v;
      const std::size_t r = rank[c.first_cell];
      if (r < levels) rhs_level[r] += v * vol_y;
    }
    rep.rhs += N * vol_y;
    if (rep.histogram.size() <= clusters.size()) rep.histogram.resize(clusters.size() + 1, 0);
    ++rep.histogram[clusters.size()];
    if (!clusters.empty()) ++hit_samples;
    b = e;
  }
  if (rep.histogram.empty()) rep.histogram.resize(1, 0);
  rep.histogram[0] += zero_samples;
  rep.image_measure = static_cast<double>(hit_samples) * vol_y;

  double acc_l = 0.0, acc_r = 0.0;
  for (std::size_t m = 0; m < levels; ++m) {
    acc_l += lhs_level[m];
    acc_r += rhs_level[m];
    rep.partial_lhs.push_back(acc_l);
    rep.partial_rhs.push_back(acc_r);
  }

  rep.abs_error = std::abs(rep.lhs - rep.rhs);
  rep.rel_error = rep.abs_error / std::max({rep.lhs, rep.rhs, 1e-300});
  rep.valid = static_cast<double>(rep.degenerate_samples) <= options.degenerate_limit * static_cast<double>(rep.y_samples);
  return rep;
}

double rhs_integral(const VectorField& phi, const ScalarField& f, const RegionMask& mask, const AreaOptions& options) {
  MappingProblem prob{phi, f, mask, RegionMask(), {}};
  return verify_area_formula(prob, options).rhs;
}

}  // namespace rieszlab

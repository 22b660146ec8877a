#include "rieszlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rieszlab {

Grid::Grid(int dim, std::span<const std::size_t> shape, std::span<const double> origin, double spacing)
    : dim_(dim), h_(spacing) {
  if (dim < 1 || dim > kMaxDim) throw InputError("grid dimension must be 1, 2 or 3");
  if (shape.size() != static_cast<std::size_t>(dim) || origin.size() != static_cast<std::size_t>(dim))
    throw InputError("grid shape/origin length must equal dimension");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InputError("grid spacing must be positive");
  for (int a = 0; a < dim; ++a) {
    if (shape[a] < 4) {
      std::ostringstream os;
      os << "grid axis " << a << " has " << shape[a] << " nodes; at least 4 required";
      throw InputError(os.str());
    }
    shape_[a] = shape[a];
    origin_[a] = origin[a];
  }
}

Grid Grid::cube(int dim, std::size_t nodes, double lo, double hi) {
  if (nodes < 2 || !(hi > lo)) throw InputError("invalid cube bounds");
  std::vector<std::size_t> shape(dim, nodes);
  std::vector<double> origin(dim, lo);
  return Grid(dim, shape, origin, (hi - lo) / static_cast<double>(nodes - 1));
}

double Grid::cell_volume() const { return std::pow(h_, dim_); }

NodeIndex Grid::unravel(std::size_t flat) const {
  NodeIndex idx{0, 0, 0};
  idx[2] = static_cast<std::ptrdiff_t>(flat % shape_[2]);
  flat /= shape_[2];
  idx[1] = static_cast<std::ptrdiff_t>(flat % shape_[1]);
  idx[0] = static_cast<std::ptrdiff_t>(flat / shape_[1]);
  return idx;
}

std::size_t Grid::ravel(const NodeIndex& idx) const {
  return (static_cast<std::size_t>(idx[0]) * shape_[1] + static_cast<std::size_t>(idx[1])) * shape_[2] +
         static_cast<std::size_t>(idx[2]);
}

bool Grid::contains(const NodeIndex& idx) const {
  for (int a = 0; a < kMaxDim; ++a)
    if (idx[a] < 0 || idx[a] >= static_cast<std::ptrdiff_t>(shape_[a])) return false;
  return true;
}

Point Grid::node(const NodeIndex& idx) const {
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + static_cast<double>(idx[a]) * h_;
  return p;
}

Point Grid::node(std::size_t flat) const { return node(unravel(flat)); }

NodeIndex Grid::nearest(const Point& x) const {
  NodeIndex idx{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    auto i = static_cast<std::ptrdiff_t>(std::llround((x[a] - origin_[a]) / h_));
    idx[a] = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(shape_[a]) - 1);
  }
  return idx;
}

std::size_t Grid::stride(int axis) const {
  std::size_t s = 1;
  for (int a = kMaxDim - 1; a > axis; --a) s *= shape_[a];
  return s;
}

double Grid::diameter() const {
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    double len = static_cast<double>(shape_[a] - 1) * h_;
    s += len * len;
  }
  return std::sqrt(s);
}

bool Grid::operator==(const Grid& o) const {
  if (dim_ != o.dim_ || shape_ != o.shape_) return false;
  if (std::abs(h_ - o.h_) > 1e-12 * h_) return false;
  for (int a = 0; a < dim_; ++a)
    if (std::abs(origin_[a] - o.origin_[a]) > 1e-9 * h_) return false;
  return true;
}

double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

ScalarField::ScalarField(Grid grid, double fill) : grid_(std::move(grid)), values_(grid_.size(), fill) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw InputError("scalar field length does not match grid");
}

double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }
double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }

VectorField::VectorField(Grid grid, int components, double fill)
    : grid_(std::move(grid)), components_(components) {
  if (components < 1) throw InputError("vector field needs at least one component");
  values_.assign(grid_.size() * static_cast<std::size_t>(components), fill);
}

VectorField::VectorField(Grid grid, int components, std::vector<double> values)
    : grid_(std::move(grid)), components_(components), values_(std::move(values)) {
  if (components < 1) throw InputError("vector field needs at least one component");
  if (values_.size() != grid_.size() * static_cast<std::size_t>(components))
    throw InputError("vector field length does not match grid");
}

ScalarField VectorField::component(int c) const {
  ScalarField out(grid_);
  for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = at(i, c);
  return out;
}

VectorField VectorField::from_components(std::span<const ScalarField> parts) {
  if (parts.empty()) throw InputError("no components");
  VectorField out(parts[0].grid(), static_cast<int>(parts.size()));
  for (std::size_t c = 0; c < parts.size(); ++c) {
    if (parts[c].grid() != parts[0].grid()) throw InputError("component grids differ");
    for (std::size_t i = 0; i < parts[c].size(); ++i) out.at(i, static_cast<int>(c)) = parts[c][i];
  }
  return out;
}

RegionMask::RegionMask(Grid grid, bool fill) : grid_(std::move(grid)), flags_(grid_.size(), fill ? 1 : 0) {}

RegionMask::RegionMask(Grid grid, std::vector<std::uint8_t> flags) : grid_(std::move(grid)), flags_(std::move(flags)) {
  if (flags_.size() != grid_.size()) throw InputError("mask length does not match grid");
  for (auto& f : flags_) {
    if (f > 1) throw InputError("mask values must be 0 or 1");
  }
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

double RegionMask::measure() const { return static_cast<double>(count()) * grid_.cell_volume(); }

std::vector<std::size_t> RegionMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flags_.size(); ++i)
    if (flags_[i]) out.push_back(i);
  return out;
}

namespace {
void require_same(const Grid& a, const Grid& b) {
  if (a != b) throw InputError("mask grids differ");
}
}  // namespace

bool RegionMask::subset_of(const RegionMask& other) const {
  require_same(grid_, other.grid_);
  for (std::size_t i = 0; i < flags_.size(); ++i)
    if (flags_[i] && !other.flags_[i]) return false;
  return true;
}

RegionMask RegionMask::operator&(const RegionMask& o) const {
  require_same(grid_, o.grid_);
  RegionMask out(grid_);
  for (std::size_t i = 0; i < flags_.size(); ++i) out.flags_[i] = flags_[i] & o.flags_[i];
  return out;
}

RegionMask RegionMask::operator|(const RegionMask& o) const {
  require_same(grid_, o.grid_);
  RegionMask out(grid_);
  for (std::size_t i = 0; i < flags_.size(); ++i) out.flags_[i] = flags_[i] | o.flags_[i];
  return out;
}

RegionMask RegionMask::operator-(const RegionMask& o) const {
  require_same(grid_, o.grid_);
  RegionMask out(grid_);
  for (std::size_t i = 0; i < flags_.size(); ++i) out.flags_[i] = flags_[i] & (1 - o.flags_[i]);
  return out;
}

RegionMask RegionMask::operator~() const {
  RegionMask out(grid_);
  for (std::size_t i = 0; i < flags_.size(); ++i) out.flags_[i] = 1 - flags_[i];
  return out;
}

bool RegionMask::operator==(const RegionMask& o) const { return grid_ == o.grid_ && flags_ == o.flags_; }

RegionMask ball_mask(const Grid& grid, const Point& center, double r) {
  RegionMask out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (distance(grid.node(i), center, grid.dim()) <= r * (1.0 + 1e-12)) out.set(i, true);
  return out;
}

RegionMask box_mask(const Grid& grid, const Point& lo, const Point& hi) {
  RegionMask out(grid);
  const double eps = 1e-9 * grid.spacing();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Point x = grid.node(i);
    bool in = true;
    for (int a = 0; a < grid.dim(); ++a) in = in && x[a] >= lo[a] - eps && x[a] <= hi[a] + eps;
    out.set(i, in);
  }
  return out;
}

std::vector<NodeIndex> ball_offsets(int dim, double radius_in_h) {
  std::vector<NodeIndex> out;
  const auto reach = static_cast<std::ptrdiff_t>(std::floor(radius_in_h + 1e-9));
  const double r2 = radius_in_h * radius_in_h * (1.0 + 1e-12) + 1e-12;
  const std::ptrdiff_t r1 = dim > 1 ? reach : 0;
  const std::ptrdiff_t r2a = dim > 2 ? reach : 0;
  for (std::ptrdiff_t i = -reach; i <= reach; ++i)
    for (std::ptrdiff_t j = -r1; j <= r1; ++j)
      for (std::ptrdiff_t k = -r2a; k <= r2a; ++k) {
        double d2 = static_cast<double>(i * i + j * j + k * k);
        if (d2 <= r2) out.push_back({i, j, k});
      }
  return out;
}

std::vector<std::array<int, kMaxDim>> multi_indices(int dim, int order) {
  std::vector<std::array<int, kMaxDim>> out;
  for (int a = order; a >= 0; --a) {
    if (dim == 1) {
      if (a == order) out.push_back({a, 0, 0});
      continue;
    }
    for (int b = order - a; b >= 0; --b) {
      int c = order - a - b;
      if (dim == 2 && c != 0) continue;
      out.push_back({a, b, c});
    }
  }
  return out;
}

}  // namespace rieszlab

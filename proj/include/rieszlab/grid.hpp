#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rieszlab {

inline constexpr int kMaxDim = 3;

using Point = std::array<double, kMaxDim>;
using NodeIndex = std::array<std::ptrdiff_t, kMaxDim>;

/// Raised on malformed inputs: bad shapes, missing files, unparsable configs.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a ball used for averaging carries no admissible radius.
class DegenerateBall : public std::runtime_error {
 public:
  DegenerateBall() : std::runtime_error("degenerate ball") {}
};

/// Raised when a computed quantity breaks a documented invariant.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform rectilinear grid on a box in R^n, n in {1,2,3}.
///
/// Nodes are origin + i*h componentwise. Flat indices are row-major with
/// axis 0 slowest. Unused trailing axes have extent 1.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, std::span<const std::size_t> shape, std::span<const double> origin, double spacing);

  /// Cube [lo, hi]^dim sampled with `nodes` nodes per axis.
  static Grid cube(int dim, std::size_t nodes, double lo, double hi);

  int dim() const { return dim_; }
  double spacing() const { return h_; }
  std::size_t extent(int axis) const { return shape_[axis]; }
  const std::array<std::size_t, kMaxDim>& shape() const { return shape_; }
  const Point& origin() const { return origin_; }
  std::size_t size() const { return shape_[0] * shape_[1] * shape_[2]; }
  /// h^n.
  double cell_volume() const;

  NodeIndex unravel(std::size_t flat) const;
  std::size_t ravel(const NodeIndex& idx) const;
  bool contains(const NodeIndex& idx) const;
  Point node(std::size_t flat) const;
  Point node(const NodeIndex& idx) const;
  /// Nearest node to a point (clamped into the box).
  NodeIndex nearest(const Point& x) const;
  /// Stride of one step along `axis` in flat indexing.
  std::size_t stride(int axis) const;
  /// Largest distance between two nodes of the box.
  double diameter() const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  int dim_ = 1;
  std::array<std::size_t, kMaxDim> shape_{1, 1, 1};
  Point origin_{0.0, 0.0, 0.0};
  double h_ = 1.0;
};

double distance(const Point& a, const Point& b, int dim);

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Grid grid, double fill = 0.0);
  ScalarField(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max() const;
  double min() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// m values per node, component index fastest.
class VectorField {
 public:
  VectorField() = default;
  VectorField(Grid grid, int components, double fill = 0.0);
  VectorField(Grid grid, int components, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  int components() const { return components_; }
  double at(std::size_t node, int c) const { return values_[node * components_ + c]; }
  double& at(std::size_t node, int c) { return values_[node * components_ + c]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  ScalarField component(int c) const;
  static VectorField from_components(std::span<const ScalarField> parts);

 private:
  Grid grid_;
  int components_ = 1;
  std::vector<double> values_;
};

class RegionMask {
 public:
  RegionMask() = default;
  explicit RegionMask(Grid grid, bool fill = false);
  RegionMask(Grid grid, std::vector<std::uint8_t> flags);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return flags_.size(); }
  bool operator[](std::size_t i) const { return flags_[i] != 0; }
  void set(std::size_t i, bool v) { flags_[i] = v ? 1 : 0; }
  std::span<const std::uint8_t> flags() const { return flags_; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }
  /// count * h^n.
  double measure() const;
  std::vector<std::size_t> indices() const;

  bool subset_of(const RegionMask& other) const;
  RegionMask operator&(const RegionMask& other) const;
  RegionMask operator|(const RegionMask& other) const;
  /// Set difference.
  RegionMask operator-(const RegionMask& other) const;
  RegionMask operator~() const;
  bool operator==(const RegionMask& other) const;

 private:
  Grid grid_;
  std::vector<std::uint8_t> flags_;
};

/// Mask of nodes within Euclidean distance r of `center`.
RegionMask ball_mask(const Grid& grid, const Point& center, double r);
/// Mask of nodes inside the closed box [lo, hi].
RegionMask box_mask(const Grid& grid, const Point& lo, const Point& hi);

/// Integer offsets o with |o| <= radius (in units of h), lexicographic order.
std::vector<NodeIndex> ball_offsets(int dim, double radius_in_h);

/// All multi-indices of order exactly `order` in dimension `dim`, lexicographic.
std::vector<std::array<int, kMaxDim>> multi_indices(int dim, int order);

}  // namespace rieszlab

#pragma once

#include <vector>

#include "rieszlab/grid.hpp"

namespace rieszlab {

/// Strictly increasing geometric radii r_i = r_1 * ratio^i covering
/// [r_1, max_radius]. The last radius is the first one >= max_radius.
class RadiusLadder {
 public:
  RadiusLadder(double first, double ratio, double max_radius);
  /// Explicit radii (any order; stored as given).
  explicit RadiusLadder(std::vector<double> radii);

  /// Default ladder for a grid: r_1 = h, ratio 2^{1/4}, up to the box diameter.
  static RadiusLadder for_grid(const Grid& grid, double ratio = 1.189207115002721);

  const std::vector<double>& radii() const { return radii_; }
  double ratio() const { return ratio_; }

 private:
  std::vector<double> radii_;
  double ratio_ = 1.0;
};

/// Mf(x) = max over the ladder of the node-sampled average of |f| on
/// B(x, r) intersected with the box. A lower bound for the continuum sup.
ScalarField maximal_function(const ScalarField& f, const RadiusLadder& ladder);

/// {x : Mf(x) <= lambda}.
RegionMask sublevel_set(const ScalarField& Mf, double lambda);

/// {x : Mf(x) > lambda}; complement of sublevel_set.
RegionMask superlevel_set(const ScalarField& Mf, double lambda);

}  // namespace rieszlab

#pragma once

#include <cstddef>
#include <vector>

#include "rieszlab/grid.hpp"

namespace rieszlab {

/// phi: R^n -> R^n sampled on a grid, weight f >= 0 on the domain.
struct MappingProblem {
  VectorField phi;
  ScalarField weight;
  RegionMask domain;
  RegionMask removed;                  ///< S; empty mask or same grid
  std::vector<RegionMask> exhaustion;  ///< optional nested A_m
};

struct AreaOptions {
  double hy = 0.0;                 ///< y-grid spacing; 0 uses the source spacing
  double merge_radius = 0.25;      ///< in units of h
  double subdivision_floor = 1e-3; ///< leaf diameter, in units of h
  double degenerate_limit = 0.01;  ///< max fraction of degenerate y-samples
  std::size_t leaf_limit = 64;     ///< leaves per (cell, y) before flagging a continuum
};

struct AreaFormulaReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
  double hy = 0.0;
  double merge_radius = 0.0;
  std::size_t y_samples = 0;
  std::size_t degenerate_samples = 0;
  bool valid = true;
  /// histogram[c] = number of y-samples with c preimages.
  std::vector<std::size_t> histogram;
  /// y-samples with at least one preimage, times h_y^n.
  double image_measure = 0.0;
  /// Cumulative values over the exhaustion masks (empty without them).
  std::vector<double> partial_lhs;
  std::vector<double> partial_rhs;
};

/// det(D phi) per node; phi must have n components.
ScalarField jacobian(const VectorField& phi);

/// Cells (identified by their lowest corner node) whose 2^n corners all lie
/// in `mask`.
RegionMask cell_mask(const RegionMask& mask);

/// Integral of f |J| over the cells of `mask`: the corner average of f |J|
/// times h^n per cell.
double lhs_integral(const VectorField& phi, const ScalarField& f, const RegionMask& mask);

struct MultiplicityResult {
  double value = 0.0;       ///< N_f(y)
  std::size_t preimages = 0;
  bool degenerate = false;
};

/// Sum of f over the preimages of y in the cells of `mask`, using the
/// multilinear interpolant of phi on each cell. n in {1, 2}.
MultiplicityResult multiplicity(const VectorField& phi, const ScalarField& f, const Point& y, const RegionMask& mask,
                                const AreaOptions& options = {});

/// Both sides over domain \ removed, with exhaustion partials when
/// exhaustion masks are present.
AreaFormulaReport verify_area_formula(const MappingProblem& problem, const AreaOptions& options = {});

/// Right side alone: sum of N_f over the y-grid times h_y^n.
double rhs_integral(const VectorField& phi, const ScalarField& f, const RegionMask& mask,
                    const AreaOptions& options = {});

}  // namespace rieszlab

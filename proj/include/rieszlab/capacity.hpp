#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rieszlab/grid.hpp"
#include "rieszlab/maximal.hpp"
#include "rieszlab/riesz.hpp"

namespace rieszlab {

/// Discrete Riesz capacity problem
///   minimize sum phi^p h^n  subject to  phi >= 0,  I_alpha * phi >= 1 on E,
/// with phi supported on `support` (a grid aligned with E's grid).
struct CapacityProblem {
  RegionMask target;
  KernelSpec spec;
  double p = 2.0;
  /// Candidate support; defaults to E's bounding box padded by `padding`
  /// times its extent on every side.
  std::optional<Grid> support;
  double padding = 0.5;
};

struct CapacityOptions {
  /// Penalty weights, in units of the natural scale value(phi0) / |E|.
  std::vector<double> penalty_schedule{1.0, 10.0, 1e2, 1e3, 1e4, 1e5};
  /// Cap on projected-gradient iterations over all stages.
  int max_iters = 6000;
  /// The penalty stage stops once min_E(I*phi) - 1 >= -tol.
  double tol = 1e-4;
  /// Exact active-set refinement of the p = 2 problem.
  bool polish = true;
};

struct CapacityEstimate {
  /// ||phi||_p^p of the returned feasible density; an upper bound of the
  /// discrete optimum.
  double value = 0.0;
  /// min over E of (I_alpha * phi) - 1 after the final rescaling.
  double margin = 0.0;
  int iterations = 0;
  bool converged = false;
  bool polished = false;
  /// Value of the rescaled penalty-stage density alone.
  double penalty_value = 0.0;
  Grid support;
  ScalarField density;
};

Grid default_support(const RegionMask& target, double padding);

/// Mask on `support` marking the nodes of `target` (grids must be aligned).
RegionMask map_to_support(const RegionMask& target, const Grid& support);

CapacityEstimate estimate_capacity(const CapacityProblem& problem, const CapacityOptions& options = {});

/// min over E of the discrete potential of a density on its grid.
double min_potential_on(const ScalarField& density, const RegionMask& target_on_support, const KernelSpec& spec);

/// p* = np / (n - alpha p).
double sobolev_conjugate(int n, double alpha, double p);

struct WeakTypeRow {
  double lambda = 0.0;
  std::size_t set_size = 0;
  double capacity = 0.0;
  double product = 0.0;  ///< lambda^p * capacity
  bool converged = true;
};

/// Capacity of {Mf > lambda} for each lambda, with kernel order k. All
/// sets share the support of the largest one.
std::vector<WeakTypeRow> weak_type_table(const ScalarField& f, int k, double p, const std::vector<double>& lambdas,
                                         const CapacityOptions& options = {}, double padding = 0.5);

struct VectorWeakTypeRow {
  double lambda = 0.0;
  double capacity = 0.0;           ///< capacity of {M|F| > lambda}
  double component_bound = 0.0;    ///< sum_i capacity of {M F_i > lambda / m}
};

/// Vector form: {M|F| > lambda} against the union bound over components.
std::vector<VectorWeakTypeRow> weak_type_table(const VectorField& F, int k, double p,
                                               const std::vector<double>& lambdas,
                                               const CapacityOptions& options = {}, double padding = 0.5);

/// Least-squares slope of log(y) against log(x) over entries with y > 0.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

struct SubadditivityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<double> parts;
  /// Feasibility margin of phi = max_i phi_i for the union target.
  double sup_margin = 0.0;
  /// ||max_i phi_i||_p^p.
  double sup_value = 0.0;
  bool holds(double rel_tol) const { return lhs <= rhs * (1.0 + rel_tol); }
};

/// Capacity of E against the sum over a cover. All problems use the
/// support of E's default padding unless `support` is given.
SubadditivityReport subadditivity_check(const RegionMask& E, const std::vector<RegionMask>& parts,
                                        const KernelSpec& spec, double p, const CapacityOptions& options = {},
                                        std::optional<Grid> support = std::nullopt);

struct MeasureCapacityReport {
  double measure = 0.0;
  double measure_power = 0.0;
  double exponent = 0.0;
  std::string exponent_rule;  ///< "p/p*" for p > 1, "(n-alpha)/n" for p = 1
  double capacity = 0.0;
};

MeasureCapacityReport measure_capacity_check(const RegionMask& E, const KernelSpec& spec, double p,
                                             const CapacityOptions& options = {});

}  // namespace rieszlab

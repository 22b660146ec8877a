#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rieszlab/capacity.hpp"
#include "rieszlab/grid.hpp"
#include "rieszlab/maximal.hpp"

namespace rieszlab {

struct PreciseRepresentative {
  ScalarField values;       ///< limit of ball averages, 0 on the nonconvergent set
  RegionMask nonconvergent;  ///< N
  double eps_c = 0.0;
};

/// Default ladder {4h, 3h, 2h, h}.
std::vector<double> default_precise_ladder(const Grid& grid);

/// Ball averages down a decreasing ladder (>= 4 radii, all >= h). A node
/// converges when the last three successive differences are all below
/// eps_c; it then takes the last average. eps_c <= 0 selects 1e-3 times
/// the field range (1e-12 max(1, |f|) for a constant field).
PreciseRepresentative precise_representative(const ScalarField& f, const std::vector<double>& ladder,
                                             double eps_c = 0.0);

/// M|grad f| with the default grid ladder (Frobenius norm of the
/// derivative matrix for vector fields).
ScalarField gradient_maximal(const ScalarField& f);
ScalarField gradient_maximal(const VectorField& F);

/// A_alpha = {M|grad f| <= alpha} for each alpha.
std::vector<RegionMask> truncation_sets(const ScalarField& f, const std::vector<double>& alphas);
std::vector<RegionMask> truncation_sets_from(const ScalarField& grad_maximal, const std::vector<double>& alphas);

struct RatioPair {
  double lhs = 0.0;
  double rhs_unit = 0.0;
  double ratio() const { return rhs_unit > 0.0 ? lhs / rhs_unit : 0.0; }
};

struct ChainSides {
  RatioPair nested;      ///< |f_B(x,r) - f_B(x,s)|  vs  (r/s)^n r alpha
  RatioPair to_precise;  ///< |f*(x) - f_B(x,r)|     vs  r alpha
  RatioPair shifted;     ///< |f_B(x,d) - f_B(y,d)|  vs  d alpha, d = |x - y|
};

/// The three average estimates behind the Lipschitz bound on A_alpha \ N.
/// Throws InputError("precondition violated") unless x, y lie in
/// A_alpha \ N, x != y and h <= s < r.
ChainSides chain_estimate_check(const ScalarField& f, const PreciseRepresentative& rep, const RegionMask& A_alpha,
                                std::size_t x, std::size_t y, double r, double s, double alpha);

/// max |f*(x) - f*(y)| / |x - y| over pairs in mask \ N: all pairs if there
/// are at most `pairs` of them, otherwise `pairs` seeded random draws
/// (half uniform, half short-range pairs at log-uniform distances).
double lipschitz_modulus(const PreciseRepresentative& rep, const RegionMask& mask, std::uint64_t seed,
                         std::size_t pairs = 1000);

/// |box \ A_alpha| for each alpha.
std::vector<double> truncation_complement_measures(const ScalarField& grad_maximal, const std::vector<double>& alphas);

/// Closed axis-aligned box.
struct Box {
  Point lo{0.0, 0.0, 0.0};
  Point hi{0.0, 0.0, 0.0};
};

/// C^2 cutoff equal to 1 on `inner` and 0 outside `outer`, a product of
/// quintic ramps per axis.
ScalarField cutoff(const Grid& grid, const Box& inner, const Box& outer);

struct ExhaustionOptions {
  std::vector<Box> omega_boxes;  ///< nested; the outermost one is the domain
  int J = 0;                     ///< levels used; 0 means all boxes
  int k = 1;
  double p = 1.0;
  double alpha_cap = 1048576.0;
  bool residual_capacity = true;
  CapacityOptions capacity;
};

struct ExhaustionLevel {
  double alpha = 0.0;     ///< alpha_j, a power of two
  double grad_norm_pow = 0.0;  ///< ||grad f_j||^p in W^{k-1,p}
  double max_grad_maximal = 0.0;
  RegionMask A;  ///< {M|grad f_j| <= alpha_j}
  RegionMask B;
  RegionMask C;
};

struct TruncationDecomposition {
  std::vector<ExhaustionLevel> levels;
  RegionMask domain;    ///< closure of the outermost box
  RegionMask residual;  ///< domain \ union of C_l
  std::optional<CapacityEstimate> residual_capacity;
};

/// Exhaustion of the domain by C_l = B_l \cap closure(Omega_l), with
/// B_l = \cap_{j=l..J} A^j and residual S. The residual capacity uses
/// alpha = k - 1 (skipped when k = 1 or S is empty).
TruncationDecomposition exhaustion(const VectorField& F, const ExhaustionOptions& options);
TruncationDecomposition exhaustion(const ScalarField& f, const ExhaustionOptions& options);

}  // namespace rieszlab

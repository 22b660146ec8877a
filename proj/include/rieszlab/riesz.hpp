#pragma once

#include <memory>
#include <vector>

#include "rieszlab/grid.hpp"

namespace rieszlab {

/// Riesz kernel I_alpha(x) = |x|^{alpha-n} / gamma(alpha) on R^n, with
/// gamma(alpha) = pi^{n/2} 2^alpha Gamma(alpha/2) / Gamma(n/2 - alpha/2).
struct KernelSpec {
  int dim = 1;
  double alpha = 0.5;
  double gamma = 1.0;

  static KernelSpec make(int dim, double alpha);

  /// Exact integral of the kernel over the centered ball of volume h^n.
  double self_cell_weight(double h) const;
};

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// Throws std::domain_error("kernel singularity") at the origin.
double kernel_value(const KernelSpec& spec, const Point& x);

enum class PotentialMethod { Direct, Fft };

/// Discrete I_alpha * phi on phi's grid:
///   sum_{y != x} I_alpha(x - y) phi(y) h^n + w0 phi(x).
/// Direct is the O(N^2) reference; Fft is a cyclic convolution on the
/// zero-padded doubled grid.
ScalarField riesz_potential(const ScalarField& phi, const KernelSpec& spec,
                            PotentialMethod method = PotentialMethod::Fft);

/// Kernel convolution on a fixed grid through FFTW. Reusable across many
/// applications on the same grid.
class KernelConvolver {
 public:
  KernelConvolver(const Grid& grid, const KernelSpec& spec);
  ~KernelConvolver();
  KernelConvolver(const KernelConvolver&) = delete;
  KernelConvolver& operator=(const KernelConvolver&) = delete;

  /// out = I_alpha * in on the grid (same discretization as riesz_potential).
  void apply(std::span<const double> in, std::span<double> out) const;

  const Grid& grid() const { return grid_; }

 private:
  struct Impl;
  Grid grid_;
  std::unique_ptr<Impl> impl_;
};

/// Dense table of the discrete kernel weights indexed by node offset.
class KernelTable {
 public:
  KernelTable(const Grid& grid, const KernelSpec& spec);
  /// Weight for offset d = x - y (w0 when d = 0, else I_alpha(d h) h^n).
  double at(const NodeIndex& d) const;

 private:
  std::array<std::ptrdiff_t, kMaxDim> half_{0, 0, 0};
  std::array<std::size_t, kMaxDim> ext_{1, 1, 1};
  std::vector<double> weights_;
};

/// g = sum_{|alpha| = order} |D^alpha f|.
ScalarField derivative_aggregate(const ScalarField& f, int order);

/// Nodes where I_{k-1} * g exceeds T, g the order-(k-1) aggregate of f.
/// spec.alpha must equal k - 1.
RegionMask bad_point_mask(const ScalarField& f, int k, const KernelSpec& spec, double threshold);

/// Potential used by bad_point_mask, exposed for threshold selection.
ScalarField bad_point_potential(const ScalarField& f, int k, const KernelSpec& spec);

struct TelescopingSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// Both sides of the ball-average telescoping identity for 0 < delta < r.
/// The factor r^{-n} is taken as omega_n / |B_r|_h, with |B_r|_h the
/// node-count volume, so that both averages are exact for affine f.
TelescopingSides telescoping_identity_check(const ScalarField& f, std::size_t node, double r, double delta);

struct KernelInequalitySides {
  double lhs = 0.0;
  double rhs_unit = 0.0;
};

/// lhs = int |y-x|^{l-n} |f|, rhs_unit = sum_{|alpha|=k} int |y-x|^{l-n+k} |D^alpha f|.
/// The node y = x contributes the exact self-cell integral of the weight.
KernelInequalitySides kernel_inequality_check(const ScalarField& f, int k, double ell, std::size_t node);

}  // namespace rieszlab

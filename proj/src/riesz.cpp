#include "rieszlab/riesz.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rieszlab/grid_ops.hpp"
#include "rieszlab/parallel.hpp"

namespace rieszlab {

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

KernelSpec KernelSpec::make(int dim, double alpha) {
  if (dim < 1 || dim > kMaxDim) throw InputError("kernel dimension must be 1, 2 or 3");
  if (!(alpha > 0.0 && alpha < dim)) {
    std::ostringstream os;
    os << "Riesz order alpha=" << alpha << " must lie in (0, " << dim << ")";
    throw InputError(os.str());
  }
  KernelSpec s;
  s.dim = dim;
  s.alpha = alpha;
  s.gamma = std::pow(std::numbers::pi, 0.5 * dim) * std::pow(2.0, alpha) * std::tgamma(0.5 * alpha) /
            std::tgamma(0.5 * dim - 0.5 * alpha);
  return s;
}

double KernelSpec::self_cell_weight(double h) const {
  const double omega = unit_ball_volume(dim);
  const double rho = h / std::pow(omega, 1.0 / dim);
  // int_{B(0,rho)} |x|^{alpha-n} dx = n omega_n rho^alpha / alpha
  return dim * omega * std::pow(rho, alpha) / (alpha * gamma);
}

double kernel_value(const KernelSpec& spec, const Point& x) {
  double r2 = 0.0;
  for (int a = 0; a < spec.dim; ++a) r2 += x[a] * x[a];
  if (r2 == 0.0) throw std::domain_error("kernel singularity");
  return std::pow(r2, 0.5 * (spec.alpha - spec.dim)) / spec.gamma;
}

KernelTable::KernelTable(const Grid& grid, const KernelSpec& spec) {
  if (spec.dim != grid.dim()) throw InputError("kernel dimension differs from grid dimension");
  const double h = grid.spacing();
  const double hn = grid.cell_volume();
  for (int a = 0; a < kMaxDim; ++a) {
    half_[a] = static_cast<std::ptrdiff_t>(grid.extent(a)) - 1;
    ext_[a] = 2 * grid.extent(a) - 1;
  }
  weights_.resize(ext_[0] * ext_[1] * ext_[2]);
  const double w0 = spec.self_cell_weight(h);
  std::size_t t = 0;
  for (std::size_t i = 0; i < ext_[0]; ++i)
    for (std::size_t j = 0; j < ext_[1]; ++j)
      for (std::size_t k = 0; k < ext_[2]; ++k, ++t) {
        const double d0 = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half_[0]);
        const double d1 = static_cast<double>(static_cast<std::ptrdiff_t>(j) - half_[1]);
        const double d2 = static_cast<double>(static_cast<std::ptrdiff_t>(k) - half_[2]);
        const double r2 = d0 * d0 + d1 * d1 + d2 * d2;
        weights_[t] = r2 == 0.0 ? w0 : std::pow(r2 * h * h, 0.5 * (spec.alpha - spec.dim)) / spec.gamma * hn;
      }
}

double KernelTable::at(const NodeIndex& d) const {
  const std::size_t i = static_cast<std::size_t>(d[0] + half_[0]);
  const std::size_t j = static_cast<std::size_t>(d[1] + half_[1]);
  const std::size_t k = static_cast<std::size_t>(d[2] + half_[2]);
  return weights_[(i * ext_[1] + j) * ext_[2] + k];
}

struct KernelConvolver::Impl {
  std::array<int, kMaxDim> padded{1, 1, 1};
  int rank = 1;
  std::size_t real_size = 0;
  std::size_t complex_size = 0;
  double* real_buf = nullptr;
  fftw_complex* spec_buf = nullptr;
  fftw_complex* kernel_hat = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Impl() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real_buf);
    fftw_free(spec_buf);
    fftw_free(kernel_hat);
  }
};

KernelConvolver::KernelConvolver(const Grid& grid, const KernelSpec& spec) : grid_(grid), impl_(std::make_unique<Impl>()) {
  const int n = grid.dim();
  Impl& m = *impl_;
  m.rank = n;
  for (int a = 0; a < n; ++a) m.padded[a] = static_cast<int>(2 * grid.extent(a));
  m.real_size = static_cast<std::size_t>(m.padded[0]) * m.padded[1] * m.padded[2];
  const int last = m.padded[n - 1];
  m.complex_size = m.real_size / static_cast<std::size_t>(last) * static_cast<std::size_t>(last / 2 + 1);
  m.real_buf = fftw_alloc_real(m.real_size);
  m.spec_buf = fftw_alloc_complex(m.complex_size);
  m.kernel_hat = fftw_alloc_complex(m.complex_size);
  m.forward = fftw_plan_dft_r2c(n, m.padded.data(), m.real_buf, m.spec_buf, FFTW_ESTIMATE);
  m.backward = fftw_plan_dft_c2r(n, m.padded.data(), m.spec_buf, m.real_buf, FFTW_ESTIMATE);

  KernelTable table(grid, spec);
  auto wrap = [&](int a, int idx) -> std::ptrdiff_t {
    const int ext = static_cast<int>(grid.extent(a));
    if (a >= n) return 0;
    if (idx < ext) return idx;
    if (idx == ext) return std::numeric_limits<std::ptrdiff_t>::max();
    return idx - m.padded[a];
  };
  std::size_t t = 0;
  for (int i = 0; i < m.padded[0]; ++i)
    for (int j = 0; j < m.padded[1]; ++j)
      for (int k = 0; k < m.padded[2]; ++k, ++t) {
        NodeIndex d{wrap(0, i), wrap(1, j), wrap(2, k)};
        bool unused = false;
        for (auto v : d) unused = unused || v == std::numeric_limits<std::ptrdiff_t>::max();
        m.real_buf[t] = unused ? 0.0 : table.at(d);
      }
  fftw_execute(m.forward);
  for (std::size_t c = 0; c < m.complex_size; ++c) {
    m.kernel_hat[c][0] = m.spec_buf[c][0];
    m.kernel_hat[c][1] = m.spec_buf[c][1];
  }
}

KernelConvolver::~KernelConvolver() = default;

void KernelConvolver::apply(std::span<const double> in, std::span<double> out) const {
  const Impl& m = *impl_;
  if (in.size() != grid_.size() || out.size() != grid_.size()) throw InputError("convolver size mismatch");
  std::fill(m.real_buf, m.real_buf + m.real_size, 0.0);
  auto padded_index = [&](std::size_t flat) {
    const NodeIndex c = grid_.unravel(flat);
    return (static_cast<std::size_t>(c[0]) * m.padded[1] + static_cast<std::size_t>(c[1])) * m.padded[2] +
           static_cast<std::size_t>(c[2]);
  };
  for (std::size_t i = 0; i < in.size(); ++i) m.real_buf[padded_index(i)] = in[i];
  fftw_execute(m.forward);
  for (std::size_t c = 0; c < m.complex_size; ++c) {
    const double ar = m.spec_buf[c][0], ai = m.spec_buf[c][1];
    const double br = m.kernel_hat[c][0], bi = m.kernel_hat[c][1];
    m.spec_buf[c][0] = ar * br - ai * bi;
    m.spec_buf[c][1] = ar * bi + ai * br;
  }
  fftw_execute(m.backward);
  const double scale = 1.0 / static_cast<double>(m.real_size);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.real_buf[padded_index(i)] * scale;
}

ScalarField riesz_potential(const ScalarField& phi, const KernelSpec& spec, PotentialMethod method) {
  const Grid& g = phi.grid();
  if (spec.dim != g.dim()) throw InputError("kernel dimension differs from grid dimension");
  if (!(spec.alpha < spec.dim)) throw InputError("Riesz order must be below the dimension");
  ScalarField out(g);
  if (method == PotentialMethod::Fft) {
    KernelConvolver conv(g, spec);
    conv.apply(phi.values(), out.values());
    return out;
  }
  KernelTable table(g, spec);
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < g.size(); ++j)
    if (phi[j] != 0.0) support.push_back(j);
  parallel_for(g.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const NodeIndex x = g.unravel(i);
      double s = 0.0;
      for (std::size_t j : support) {
        const NodeIndex y = g.unravel(j);
        s += table.at({x[0] - y[0], x[1] - y[1], x[2] - y[2]}) * phi[j];
      }
      out[i] = s;
    }
  });
  return out;
}

ScalarField derivative_aggregate(const ScalarField& f, int order) {
  if (order < 0 || order > 3) throw InputError("derivative aggregate order must be in [0, 3]");
  ScalarField g(f.grid());
  for (const auto& alpha : multi_indices(f.grid().dim(), order)) {
    ScalarField d = derivative(f, alpha);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += std::abs(d[i]);
  }
  return g;
}

ScalarField bad_point_potential(const ScalarField& f, int k, const KernelSpec& spec) {
  if (k < 2) throw InputError("bad point detection needs k >= 2");
  if (std::abs(spec.alpha - (k - 1)) > 1e-12) throw InputError("kernel order must equal k - 1");
  return riesz_potential(derivative_aggregate(f, k - 1), spec);
}

RegionMask bad_point_mask(const ScalarField& f, int k, const KernelSpec& spec, double threshold) {
  if (!(threshold > 0.0)) throw InputError("bad point threshold must be positive");
  ScalarField pot = bad_point_potential(f, k, spec);
  RegionMask out(f.grid());
  for (std::size_t i = 0; i < pot.size(); ++i) out.set(i, pot[i] > threshold);
  return out;
}

TelescopingSides telescoping_identity_check(const ScalarField& f, std::size_t node, double r, double delta) {
  const Grid& g = f.grid();
  const int n = g.dim();
  const double h = g.spacing();
  if (!(delta > 0.0 && delta < r)) throw InputError("telescoping check needs 0 < delta < r");
  if (delta < h * (1.0 - 1e-12)) throw DegenerateBall();
  const VectorField grad = gradient(f);
  const Point x = g.node(node);
  const double hn = g.cell_volume();
  const double omega = unit_ball_volume(n);

  double sum_r = 0.0, sum_d = 0.0, flux_r = 0.0, flux_d = 0.0, shell = 0.0;
  std::size_t count_r = 0, count_d = 0;
  const NodeIndex c = g.unravel(node);
  for (const auto& o : ball_offsets(n, r / h)) {
    NodeIndex q{c[0] + o[0], c[1] + o[1], c[2] + o[2]};
    if (!g.contains(q)) throw InputError("telescoping ball leaves the grid box");
    const std::size_t j = g.ravel(q);
    const Point y = g.node(j);
    double dot = 0.0, dist2 = 0.0;
    for (int a = 0; a < n; ++a) {
      dot += grad.at(j, a) * (y[a] - x[a]);
      dist2 += (y[a] - x[a]) * (y[a] - x[a]);
    }
    const double dist = std::sqrt(dist2);
    sum_r += f[j];
    flux_r += dot;
    ++count_r;
    if (dist <= delta * (1.0 + 1e-12)) {
      sum_d += f[j];
      flux_d += dot;
      ++count_d;
    } else {
      shell += dot * std::pow(dist, -n) * hn;
    }
  }
  // r^{-n} int_{B_r} u  ->  omega_n * mean_{B_r} u
  const double mean_r = sum_r / static_cast<double>(count_r);
  const double mean_d = sum_d / static_cast<double>(count_d);
  const double lhs = omega * (mean_r - mean_d);
  // d/drho of the average over B_rho is rho^{-n-1} int_{B_rho} grad f . (y - x);
  // integrating over [delta, r] gives the three terms below.
  const double rhs = -omega / n * (flux_r / static_cast<double>(count_r)) +
                     omega / n * (flux_d / static_cast<double>(count_d)) + shell / n;
  return {lhs, rhs, std::abs(lhs - rhs)};
}

KernelInequalitySides kernel_inequality_check(const ScalarField& f, int k, double ell, std::size_t node) {
  const Grid& g = f.grid();
  const int n = g.dim();
  if (k < 1 || k > 3) throw InputError("kernel inequality order k must be in [1, 3]");
  if (!(ell > 0.0)) throw InputError("kernel inequality needs ell > 0");
  const double hn = g.cell_volume();
  const double omega = unit_ball_volume(n);
  const double rho = g.spacing() / std::pow(omega, 1.0 / n);
  const Point x = g.node(node);
  // int_{B(0,rho)} |z|^{e-n} dz = n omega rho^e / e
  auto self_weight = [&](double e) { return n * omega * std::pow(rho, e) / e; };

  const ScalarField agg = derivative_aggregate(f, k);
  KernelInequalitySides out;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (j == node) {
      out.lhs += std::abs(f[j]) * self_weight(ell);
      out.rhs_unit += agg[j] * self_weight(ell + k);
      continue;
    }
    const double d = distance(g.node(j), x, n);
    out.lhs += std::pow(d, ell - n) * std::abs(f[j]) * hn;
    out.rhs_unit += std::pow(d, ell - n + k) * agg[j] * hn;
  }
  return out;
}

}  // namespace rieszlab

#include "rieszlab/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rieszlab/grid_ops.hpp"
#include "rieszlab/parallel.hpp"
#include "rieszlab/riesz.hpp"

namespace rieszlab {

std::vector<double> default_precise_ladder(const Grid& grid) {
  const double h = grid.spacing();
  return {4 * h, 3 * h, 2 * h, h};
}

PreciseRepresentative precise_representative(const ScalarField& f, const std::vector<double>& ladder, double eps_c) {
  if (ladder.size() < 4) throw InputError("precise representative needs at least 4 radii");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (!(ladder[i] < ladder[i - 1])) throw InputError("precise representative ladder must be decreasing");
  if (eps_c <= 0.0) {
    eps_c = 1e-3 * (f.max() - f.min());
    if (eps_c == 0.0) eps_c = 1e-12 * std::max(1.0, std::abs(f.max()));
  }

  PreciseRepresentative rep{ScalarField(f.grid()), RegionMask(f.grid()), eps_c};
  const std::size_t m = ladder.size();
  std::vector<std::uint8_t> bad(f.size(), 0);
  parallel_for(f.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> avg(m);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < m; ++j) avg[j] = ball_average(f, i, ladder[j]);
      bool ok = true;
      for (std::size_t j = m - 3; j < m; ++j)
        if (!(std::abs(avg[j] - avg[j - 1]) < eps_c)) ok = false;
      if (ok && std::isfinite(avg[m - 1])) {
        rep.values[i] = avg[m - 1];
      } else {
        rep.values[i] = 0.0;
        bad[i] = 1;
      }
    }
  });
  rep.nonconvergent = RegionMask(f.grid(), std::move(bad));
  return rep;
}

ScalarField gradient_maximal(const ScalarField& f) {
  return maximal_function(vector_magnitude(gradient(f)), RadiusLadder::for_grid(f.grid()));
}

ScalarField gradient_maximal(const VectorField& F) {
  return maximal_function(vector_magnitude(jacobian_matrix(F)), RadiusLadder::for_grid(F.grid()));
}

std::vector<RegionMask> truncation_sets_from(const ScalarField& grad_maximal, const std::vector<double>& alphas) {
  std::vector<RegionMask> out;
  for (double a : alphas) out.push_back(sublevel_set(grad_maximal, a));
  return out;
}

std::vector<RegionMask> truncation_sets(const ScalarField& f, const std::vector<double>& alphas) {
  return truncation_sets_from(gradient_maximal(f), alphas);
}

ChainSides chain_estimate_check(const ScalarField& f, const PreciseRepresentative& rep, const RegionMask& A_alpha,
                                std::size_t x, std::size_t y, double r, double s, double alpha) {
  const Grid& g = f.grid();
  const double h = g.spacing();
  auto admissible = [&](std::size_t i) { return i < g.size() && A_alpha[i] && !rep.nonconvergent[i]; };
  if (!admissible(x) || !admissible(y) || x == y || !(s >= h * (1 - 1e-12)) || !(s < r) || !(alpha > 0.0))
    throw InputError("precondition violated");
  const int n = g.dim();
  ChainSides out;
  const double fr = ball_average(f, x, r);
  out.nested = {std::abs(fr - ball_average(f, x, s)), std::pow(r / s, n) * r * alpha};
  out.to_precise = {std::abs(rep.values[x] - fr), r * alpha};
  const double d = distance(g.node(x), g.node(y), n);
  out.shifted = {std::abs(ball_average(f, x, d) - ball_average(f, y, d)), d * alpha};
  return out;
}

double lipschitz_modulus(const PreciseRepresentative& rep, const RegionMask& mask, std::uint64_t seed,
                         std::size_t pairs) {
  const Grid& g = rep.values.grid();
  std::vector<std::size_t> nodes = (mask - rep.nonconvergent).indices();
  if (nodes.size() < 2) throw InputError("lipschitz modulus needs at least 2 usable nodes");
  const int n = g.dim();
  auto slope = [&](std::size_t a, std::size_t b) {
    return std::abs(rep.values[a] - rep.values[b]) / distance(g.node(a), g.node(b), n);
  };
  double best = 0.0;
  const double total = 0.5 * static_cast<double>(nodes.size()) * static_cast<double>(nodes.size() - 1);
  if (total <= static_cast<double>(pairs)) {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j) best = std::max(best, slope(nodes[i], nodes[j]));
    return best;
  }
  // Half of the draws are uniform pairs; the other half pair a uniform node
  // with a nearby one at a log-uniform scale, where the largest slopes sit.
  RegionMask usable(g);
  for (std::size_t i : nodes) usable.set(i, true);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t max_extent = 1;
  for (int a = 0; a < n; ++a) max_extent = std::max(max_extent, g.extent(a));
  const double log_span = std::log(static_cast<double>(max_extent));
  for (std::size_t k = 0; k < pairs; ++k) {
    const std::size_t a = nodes[pick(rng)];
    std::size_t b = a;
    if (k % 2 == 0) {
      while (b == a) b = nodes[pick(rng)];
    } else {
      const NodeIndex c = g.unravel(a);
      for (int attempt = 0; attempt < 64 && b == a; ++attempt) {
        const double radius = std::exp(unit(rng) * log_span);
        NodeIndex q = c;
        for (int d = 0; d < n; ++d)
          q[d] += static_cast<std::ptrdiff_t>(std::llround((2.0 * unit(rng) - 1.0) * radius));
        if (g.contains(q) && usable[g.ravel(q)]) b = g.ravel(q);
      }
      while (b == a) b = nodes[pick(rng)];
    }
    best = std::max(best, slope(a, b));
  }
  return best;
}

std::vector<double> truncation_complement_measures(const ScalarField& grad_maximal, const std::vector<double>& alphas) {
  std::vector<double> out;
  for (double a : alphas) out.push_back(superlevel_set(grad_maximal, a).measure());
  return out;
}

namespace {

double quintic(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double ramp(double x, double lo_out, double lo_in, double hi_in, double hi_out) {
  if (x < lo_in) return lo_in > lo_out ? quintic((x - lo_out) / (lo_in - lo_out)) : (x < lo_out ? 0.0 : 1.0);
  if (x > hi_in) return hi_out > hi_in ? quintic((hi_out - x) / (hi_out - hi_in)) : (x > hi_out ? 0.0 : 1.0);
  return 1.0;
}

bool box_inside(const Box& a, const Box& b, int n) {
  for (int i = 0; i < n; ++i)
    if (a.lo[i] < b.lo[i] || a.hi[i] > b.hi[i] || !(a.lo[i] <= a.hi[i])) return false;
  return true;
}

Box grid_box(const Grid& g) {
  Box b;
  for (int a = 0; a < g.dim(); ++a) {
    b.lo[a] = g.origin()[a];
    b.hi[a] = g.origin()[a] + g.spacing() * static_cast<double>(g.extent(a) - 1);
  }
  return b;
}

VectorField scale(const VectorField& F, const ScalarField& z) {
  VectorField out = F;
  for (std::size_t i = 0; i < z.size(); ++i)
    for (int c = 0; c < F.components(); ++c) out.at(i, c) *= z[i];
  return out;
}

}  // namespace

ScalarField cutoff(const Grid& grid, const Box& inner, const Box& outer) {
  ScalarField z(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point x = grid.node(i);
    double v = 1.0;
    for (int a = 0; a < grid.dim(); ++a) v *= ramp(x[a], outer.lo[a], inner.lo[a], inner.hi[a], outer.hi[a]);
    z[i] = v;
  }
  return z;
}

TruncationDecomposition exhaustion(const VectorField& F, const ExhaustionOptions& options) {
  const Grid& g = F.grid();
  const int n = g.dim();
  const auto& boxes = options.omega_boxes;
  if (boxes.empty()) throw InputError("exhaustion needs at least one omega box");
  const int J = options.J == 0 ? static_cast<int>(boxes.size()) : options.J;
  if (J < 1 || J > static_cast<int>(boxes.size())) throw InputError("exhaustion J must lie in [1, number of boxes]");
  if (options.k < 1 || options.k > 3) throw InputError("exhaustion k must lie in [1, 3]");
  if (!((options.k - 1) * options.p < n)) throw InputError("exhaustion requires (k-1)p < n");
  const Box whole = grid_box(g);
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    const Box& outer = j + 1 < boxes.size() ? boxes[j + 1] : whole;
    if (!box_inside(boxes[j], outer, n)) throw InputError("omega boxes must be nested inside the grid box");
  }

  TruncationDecomposition dec;
  dec.domain = box_mask(g, boxes.back().lo, boxes.back().hi);
  for (int j = 1; j <= J; ++j) {
    const Box& inner = boxes[static_cast<std::size_t>(j - 1)];
    const Box& outer = j < static_cast<int>(boxes.size()) ? boxes[static_cast<std::size_t>(j)] : whole;
    const VectorField Fj = scale(F, cutoff(g, inner, outer));
    const VectorField D = jacobian_matrix(Fj);
    ExhaustionLevel lev;
    lev.grad_norm_pow = sobolev_norm_pow(D, options.k - 1, options.p);
    const double need = std::ldexp(lev.grad_norm_pow, j);
    double alpha = 1.0;
    while (std::pow(alpha, options.p) < need && alpha <= options.alpha_cap) alpha *= 2.0;
    if (alpha > options.alpha_cap) {
      std::ostringstream os;
      os << "exhaustion threshold unachievable at level " << j << ": need alpha^p >= " << need
         << " but alpha_cap = " << options.alpha_cap;
      throw InputError(os.str());
    }
    lev.alpha = alpha;
    const ScalarField M = maximal_function(vector_magnitude(D), RadiusLadder::for_grid(g));
    lev.max_grad_maximal = M.max();
    lev.A = sublevel_set(M, alpha);
    dec.levels.push_back(std::move(lev));
  }
  // B_l = A^l & ... & A^J, built from the top down.
  RegionMask acc(g, true);
  for (int l = J; l >= 1; --l) {
    auto& lev = dec.levels[static_cast<std::size_t>(l - 1)];
    acc = acc & lev.A;
    lev.B = acc;
    const Box& box = boxes[static_cast<std::size_t>(l - 1)];
    lev.C = lev.B & box_mask(g, box.lo, box.hi);
  }
  RegionMask covered(g);
  for (const auto& lev : dec.levels) covered = covered | lev.C;
  dec.residual = dec.domain - covered;

  if (options.residual_capacity && options.k >= 2) {
    if (dec.residual.empty()) {
      CapacityEstimate est;
      est.converged = true;
      dec.residual_capacity = est;
    } else {
      const KernelSpec spec = KernelSpec::make(n, options.k - 1);
      dec.residual_capacity =
          estimate_capacity(CapacityProblem{dec.residual, spec, options.p, std::nullopt}, options.capacity);
    }
  }
  return dec;
}

TruncationDecomposition exhaustion(const ScalarField& f, const ExhaustionOptions& options) {
  return exhaustion(VectorField(f.grid(), 1, std::vector<double>(f.values().begin(), f.values().end())), options);
}

}  // namespace rieszlab

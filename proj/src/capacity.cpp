#include "rieszlab/capacity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "rieszlab/grid_ops.hpp"

namespace rieszlab {

namespace {

constexpr double kDenseEntryLimit = 6e6;
constexpr std::size_t kPolishLimit = 2500;

// Rows: nodes of E inside the support. Columns: all support nodes.
class ConstraintOperator {
 public:
  ConstraintOperator(const Grid& support, std::vector<std::size_t> rows, const KernelSpec& spec)
      : support_(support), rows_(std::move(rows)) {
    const double m = static_cast<double>(rows_.size());
    const double n = static_cast<double>(support.size());
    if (m * n <= kDenseEntryLimit) {
      KernelTable table(support, spec);
      dense_.resize(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(support.size()));
      for (std::size_t i = 0; i < rows_.size(); ++i) {
        const NodeIndex x = support.unravel(rows_[i]);
        for (std::size_t j = 0; j < support.size(); ++j) {
          const NodeIndex y = support.unravel(j);
          dense_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
              table.at({x[0] - y[0], x[1] - y[1], x[2] - y[2]});
        }
      }
      is_dense_ = true;
    } else {
      conv_ = std::make_unique<KernelConvolver>(support, spec);
      scratch_.resize(support.size());
      scratch2_.resize(support.size());
    }
  }

  std::size_t rows() const { return rows_.size(); }
  std::size_t cols() const { return support_.size(); }

  void apply(const Eigen::VectorXd& phi, Eigen::VectorXd& out) const {
    if (is_dense_) {
      out.noalias() = dense_ * phi;
      return;
    }
    std::copy(phi.data(), phi.data() + phi.size(), scratch_.begin());
    conv_->apply(scratch_, scratch2_);
    out.resize(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t i = 0; i < rows_.size(); ++i) out[static_cast<Eigen::Index>(i)] = scratch2_[rows_[i]];
  }

  void apply_transpose(const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
    if (is_dense_) {
      out.noalias() = dense_.transpose() * w;
      return;
    }
    std::fill(scratch_.begin(), scratch_.end(), 0.0);
    for (std::size_t i = 0; i < rows_.size(); ++i) scratch_[rows_[i]] = w[static_cast<Eigen::Index>(i)];
    conv_->apply(scratch_, scratch2_);
    out = Eigen::Map<const Eigen::VectorXd>(scratch2_.data(), static_cast<Eigen::Index>(scratch2_.size()));
  }

  /// K K^T.
  Eigen::MatrixXd gram() const {
    if (is_dense_) return dense_ * dense_.transpose();
    const auto m = static_cast<Eigen::Index>(rows_.size());
    Eigen::MatrixXd G(m, m);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m), col, kt;
    for (Eigen::Index i = 0; i < m; ++i) {
      e[i] = 1.0;
      apply_transpose(e, kt);
      apply(kt, col);
      G.col(i) = col;
      e[i] = 0.0;
    }
    return 0.5 * (G + G.transpose());
  }

 private:
  Grid support_;
  std::vector<std::size_t> rows_;
  bool is_dense_ = false;
  Eigen::MatrixXd dense_;
  std::unique_ptr<KernelConvolver> conv_;
  mutable std::vector<double> scratch_, scratch2_;
};

double power_sum(const Eigen::VectorXd& phi, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double v = phi[i];
    s += p == 1.0 ? v : (p == 2.0 ? v * v : std::pow(v, p));
  }
  return s;
}

struct PenaltyState {
  const ConstraintOperator& K;
  double p;
  double hn;
  double mu = 1.0;
  Eigen::VectorXd target;  // 1 + lambda / (2 mu)

  // Smooth part mu |(target - K phi)_+|^2; fills K phi and the residual.
  double smooth(const Eigen::VectorXd& phi, Eigen::VectorXd& kphi, Eigen::VectorXd& r) const {
    K.apply(phi, kphi);
    r = (target - kphi).cwiseMax(0.0);
    return mu * r.squaredNorm();
  }

  double regular(const Eigen::VectorXd& phi) const { return hn * power_sum(phi, p); }

  // argmin_x 1/2 (x - v)^2 + t hn x^p over x >= 0, entrywise.
  void prox(Eigen::VectorXd& v, double t) const {
    const double c = t * hn;
    if (p == 2.0) {
      v = v.cwiseMax(0.0) / (1.0 + 2.0 * c);
      return;
    }
    if (p == 1.0) {
      v = (v.array() - c).cwiseMax(0.0).matrix();
      return;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double b = v[i];
      if (b <= 0.0) {
        v[i] = 0.0;
        continue;
      }
      // x - b + c p x^{p-1} is increasing with a root in (0, b].
      double lo = 0.0, hi = b, x = b / (1.0 + c * p * std::pow(b, p - 2.0));
      for (int it = 0; it < 60; ++it) {
        const double fx = x - b + c * p * std::pow(x, p - 1.0);
        if (fx > 0.0)
          hi = x;
        else
          lo = x;
        if (hi - lo <= 1e-15 * b) break;
        const double d = 1.0 + c * p * (p - 1.0) * std::pow(x, p - 2.0);
        double nx = x - fx / d;
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        if (std::abs(nx - x) <= 1e-15 * b) {
          x = nx;
          break;
        }
        x = nx;
      }
      v[i] = x;
    }
  }
};

// Accelerated proximal gradient (FISTA) with backtracking on the smooth
// part and function-value restarts. Returns iterations used.
int minimize_penalty(const PenaltyState& st, Eigen::VectorXd& phi, double& lipschitz, int budget) {
  Eigen::VectorXd y = phi, prev = phi, kphi, r, grad, cand, kcand, rcand;
  double t = 1.0;
  double f_prev = st.smooth(phi, kphi, r) + st.regular(phi);
  int it = 0;
  for (; it < budget; ++it) {
    const double sy = st.smooth(y, kphi, r);
    st.K.apply_transpose(r, grad);
    grad *= -2.0 * st.mu;
    double sc;
    while (true) {
      cand = y - grad / lipschitz;
      st.prox(cand, 1.0 / lipschitz);
      sc = st.smooth(cand, kcand, rcand);
      const Eigen::VectorXd d = cand - y;
      const double model = sy + grad.dot(d) + 0.5 * lipschitz * d.squaredNorm();
      if (sc <= model + 1e-14 * std::abs(sy) || lipschitz > 1e300) break;
      lipschitz *= 2.0;
    }
    const double fc = sc + st.regular(cand);
    if (fc > f_prev) {
      // Restart momentum from the last accepted point.
      if (t == 1.0) {
        ++it;
        break;
      }
      t = 1.0;
      y = phi;
      continue;
    }
    const double step = (cand - phi).norm();
    prev = phi;
    phi = cand;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = phi + ((t - 1.0) / t_next) * (phi - prev);
    t = t_next;
    const double rel = std::abs(f_prev - fc) / std::max(std::abs(fc), 1e-300);
    f_prev = fc;
    if (step <= 1e-10 * std::max(phi.norm(), 1e-300) && rel < 1e-13) {
      ++it;
      break;
    }
    lipschitz *= 0.9;
  }
  return it;
}

// Lawson-Hanson active set for min 1/2 v'Qv - b'v, v >= 0.
Eigen::VectorXd nonnegative_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b, const std::vector<char>& warm) {
  const Eigen::Index m = Q.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
  std::vector<char> passive(static_cast<std::size_t>(m), 0);

  auto solve_passive = [&](const std::vector<char>& set) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < m; ++i)
      if (set[static_cast<std::size_t>(i)]) idx.push_back(i);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    if (idx.empty()) return z;
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd A(k, k);
    Eigen::VectorXd rhs(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      rhs[a] = b[idx[static_cast<std::size_t>(a)]];
      for (Eigen::Index c = 0; c < k; ++c) A(a, c) = Q(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd sol = ldlt.solve(rhs);
    for (Eigen::Index a = 0; a < k; ++a) z[idx[static_cast<std::size_t>(a)]] = sol[a];
    return z;
  };

  if (std::count(warm.begin(), warm.end(), 1) > 0) {
    Eigen::VectorXd z = solve_passive(warm);
    bool positive = true;
    for (Eigen::Index i = 0; i < m; ++i)
      if (warm[static_cast<std::size_t>(i)] && !(z[i] > 0.0)) positive = false;
    if (positive) {
      v = z;
      passive = warm;
    }
  }

  const double tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());
  for (int outer = 0; outer < 4 * m + 20; ++outer) {
    const Eigen::VectorXd w = b - Q * v;
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!passive[static_cast<std::size_t>(i)] && w[i] > best_w) {
        best_w = w[i];
        best = i;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = 1;
    for (int inner = 0; inner < 4 * m + 20; ++inner) {
      Eigen::VectorXd z = solve_passive(passive);
      double step = 1.0;
      bool feasible = true;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (!passive[static_cast<std::size_t>(i)] || z[i] > 0.0) continue;
        feasible = false;
        const double denom = v[i] - z[i];
        if (denom > 0.0) step = std::min(step, v[i] / denom);
      }
      if (feasible) {
        v = z;
        break;
      }
      v += step * (z - v);
      for (Eigen::Index i = 0; i < m; ++i)
        if (passive[static_cast<std::size_t>(i)] && v[i] <= 1e-300) {
          passive[static_cast<std::size_t>(i)] = 0;
          v[i] = 0.0;
        }
    }
  }
  return v.cwiseMax(0.0);
}

// Scales phi so that min over E of K phi equals 1. Returns false if phi
// has no positive potential on E.
bool rescale_feasible(const ConstraintOperator& K, Eigen::VectorXd& phi) {
  Eigen::VectorXd kphi;
  K.apply(phi, kphi);
  const double lo = kphi.minCoeff();
  if (!(lo > 0.0) || !std::isfinite(lo)) return false;
  phi /= lo;
  return true;
}

}  // namespace

Grid default_support(const RegionMask& target, double padding) {
  const Grid& g = target.grid();
  const int n = g.dim();
  std::array<std::ptrdiff_t, kMaxDim> lo{0, 0, 0}, hi{0, 0, 0};
  bool any = false;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!target[i]) continue;
    const NodeIndex c = g.unravel(i);
    for (int a = 0; a < n; ++a) {
      lo[a] = any ? std::min(lo[a], c[a]) : c[a];
      hi[a] = any ? std::max(hi[a], c[a]) : c[a];
    }
    any = true;
  }
  if (!any) return g;
  std::vector<std::size_t> shape(n);
  std::vector<double> origin(n);
  for (int a = 0; a < n; ++a) {
    const std::ptrdiff_t ext = hi[a] - lo[a] + 1;
    const auto pad = std::max<std::ptrdiff_t>(2, static_cast<std::ptrdiff_t>(std::ceil(padding * static_cast<double>(ext))));
    shape[a] = static_cast<std::size_t>(std::max<std::ptrdiff_t>(4, ext + 2 * pad));
    const std::ptrdiff_t start = lo[a] - (static_cast<std::ptrdiff_t>(shape[a]) - ext) / 2;
    origin[a] = g.origin()[a] + static_cast<double>(start) * g.spacing();
  }
  return Grid(n, shape, origin, g.spacing());
}

RegionMask map_to_support(const RegionMask& target, const Grid& support) {
  const Grid& g = target.grid();
  if (g.dim() != support.dim() || std::abs(g.spacing() - support.spacing()) > 1e-12 * g.spacing())
    throw InputError("support grid spacing/dimension differs from target grid");
  RegionMask out(support);
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!target[i]) continue;
    const Point x = g.node(i);
    NodeIndex q{0, 0, 0};
    for (int a = 0; a < g.dim(); ++a) {
      const double u = (x[a] - support.origin()[a]) / support.spacing();
      q[a] = static_cast<std::ptrdiff_t>(std::llround(u));
      if (std::abs(u - static_cast<double>(q[a])) > 1e-6) throw InputError("support grid is not aligned with target grid");
    }
    if (!support.contains(q)) throw InputError("target node lies outside the capacity support");
    out.set(support.ravel(q), true);
  }
  return out;
}

double min_potential_on(const ScalarField& density, const RegionMask& target_on_support, const KernelSpec& spec) {
  ScalarField pot = riesz_potential(density, spec, PotentialMethod::Direct);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pot.size(); ++i)
    if (target_on_support[i]) lo = std::min(lo, pot[i]);
  return lo;
}

CapacityEstimate estimate_capacity(const CapacityProblem& problem, const CapacityOptions& options) {
  const KernelSpec& spec = problem.spec;
  const double p = problem.p;
  const int n = problem.target.grid().dim();
  if (!(p >= 1.0)) throw InputError("capacity exponent p must be >= 1");
  if (spec.dim != n) throw InputError("kernel dimension differs from target grid");
  if (!(spec.alpha * p < n)) {
    std::ostringstream os;
    os << "capacity requires alpha*p < n (alpha=" << spec.alpha << ", p=" << p << ", n=" << n << ")";
    throw InputError(os.str());
  }

  CapacityEstimate est;
  est.support = problem.support ? *problem.support : default_support(problem.target, problem.padding);
  est.density = ScalarField(est.support);
  if (problem.target.empty()) {
    est.converged = true;
    return est;
  }

  const RegionMask on_support = map_to_support(problem.target, est.support);
  const std::vector<std::size_t> rows = on_support.indices();
  ConstraintOperator K(est.support, rows, spec);
  const double hn = est.support.cell_volume();
  const auto N = static_cast<Eigen::Index>(K.cols());
  const auto m = static_cast<Eigen::Index>(K.rows());

  // Constant start scaled to be feasible.
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(N), k1;
  K.apply(ones, k1);
  Eigen::VectorXd phi = ones / k1.minCoeff();
  const double natural = hn * power_sum(phi, p) / static_cast<double>(m);

  PenaltyState st{K, p, hn, 1.0, {}};
  Eigen::VectorXd multipliers = Eigen::VectorXd::Zero(m), kphi, r;
  // Lipschitz seed from ||K||^2 (power iteration) and the p = 2 curvature.
  double knorm2 = 0.0;
  {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(N) / std::sqrt(static_cast<double>(N)), kv, ktkv;
    for (int i = 0; i < 20; ++i) {
      K.apply(v, kv);
      K.apply_transpose(kv, ktkv);
      knorm2 = ktkv.norm();
      v = ktkv / knorm2;
    }
  }

  int used = 0;
  const auto stages = options.penalty_schedule.size();
  const int per_stage = std::max(1, options.max_iters / std::max<int>(1, static_cast<int>(stages)));
  for (std::size_t s = 0; s < stages && used < options.max_iters; ++s) {
    st.mu = options.penalty_schedule[s] * natural;
    st.target = Eigen::VectorXd::Ones(m) + multipliers / (2.0 * st.mu);
    double L = 2.0 * st.mu * knorm2;
    used += minimize_penalty(st, phi, L, std::min(per_stage, options.max_iters - used));
    st.smooth(phi, kphi, r);
    multipliers = 2.0 * st.mu * r;
    const double margin = kphi.minCoeff() - 1.0;
    if (margin >= -options.tol) {
      est.converged = true;
      break;
    }
  }
  est.iterations = used;

  if (!rescale_feasible(K, phi)) {
    phi = ones / k1.minCoeff();
    est.converged = false;
  }
  est.penalty_value = hn * power_sum(phi, p);
  Eigen::VectorXd best = phi;
  double best_value = est.penalty_value;

  if (options.polish && p == 2.0 && static_cast<std::size_t>(m) <= kPolishLimit) {
    const Eigen::MatrixXd Q = K.gram() / (2.0 * hn);
    std::vector<char> warm(static_cast<std::size_t>(m), 0);
    for (Eigen::Index i = 0; i < m; ++i) warm[static_cast<std::size_t>(i)] = multipliers[i] > 0.0 ? 1 : 0;
    const Eigen::VectorXd nu = nonnegative_qp(Q, Eigen::VectorXd::Ones(m), warm);
    Eigen::VectorXd candidate;
    K.apply_transpose(nu, candidate);
    candidate /= 2.0 * hn;
    candidate = candidate.cwiseMax(0.0);
    if (rescale_feasible(K, candidate)) {
      const double v = hn * power_sum(candidate, p);
      if (v < best_value) {
        best = candidate;
        best_value = v;
        est.polished = true;
        est.converged = true;
      }
    }
  }

  K.apply(best, kphi);
  est.margin = kphi.minCoeff() - 1.0;
  est.value = best_value;
  for (Eigen::Index i = 0; i < N; ++i) est.density[static_cast<std::size_t>(i)] = best[i];
  return est;
}

double sobolev_conjugate(int n, double alpha, double p) {
  if (!(alpha * p < n)) throw InputError("p* requires alpha*p < n");
  return n * p / (n - alpha * p);
}

std::vector<WeakTypeRow> weak_type_table(const ScalarField& f, int k, double p, const std::vector<double>& lambdas,
                                         const CapacityOptions& options, double padding) {
  const int n = f.grid().dim();
  if (!(k * p < n)) throw InputError("weak-type table requires k*p < n");
  const KernelSpec spec = KernelSpec::make(n, k);
  const ScalarField Mf = maximal_function(f, RadiusLadder::for_grid(f.grid()));
  std::vector<RegionMask> sets;
  std::optional<Grid> support;
  double smallest = std::numeric_limits<double>::infinity();
  for (double lambda : lambdas) {
    sets.push_back(superlevel_set(Mf, lambda));
    if (lambda < smallest && !sets.back().empty()) {
      smallest = lambda;
      support = default_support(sets.back(), padding);
    }
  }
  std::vector<WeakTypeRow> rows;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    WeakTypeRow row;
    row.lambda = lambdas[i];
    row.set_size = sets[i].count();
    if (!sets[i].empty()) {
      CapacityProblem prob{sets[i], spec, p, support, padding};
      CapacityEstimate est = estimate_capacity(prob, options);
      row.capacity = est.value;
      row.converged = est.converged;
    }
    row.product = std::pow(row.lambda, p) * row.capacity;
    rows.push_back(row);
  }
  return rows;
}

std::vector<VectorWeakTypeRow> weak_type_table(const VectorField& F, int k, double p, const std::vector<double>& lambdas,
                                               const CapacityOptions& options, double padding) {
  const Grid& g = F.grid();
  const int n = g.dim();
  if (!(k * p < n)) throw InputError("weak-type table requires k*p < n");
  const KernelSpec spec = KernelSpec::make(n, k);
  const RadiusLadder ladder = RadiusLadder::for_grid(g);
  const ScalarField MF = maximal_function(vector_magnitude(F), ladder);
  std::vector<ScalarField> Mi;
  for (int c = 0; c < F.components(); ++c) Mi.push_back(maximal_function(F.component(c), ladder));
  const double m = F.components();

  // One support covering every set at the smallest lambda.
  const double lo = *std::min_element(lambdas.begin(), lambdas.end());
  RegionMask cover = superlevel_set(MF, lo);
  for (const auto& M : Mi) cover = cover | superlevel_set(M, lo / m);
  const Grid support = default_support(cover.empty() ? RegionMask(g, true) : cover, padding);

  auto cap = [&](const RegionMask& E) {
    if (E.empty()) return 0.0;
    return estimate_capacity(CapacityProblem{E, spec, p, support, padding}, options).value;
  };
  std::vector<VectorWeakTypeRow> rows;
  for (double lambda : lambdas) {
    VectorWeakTypeRow row;
    row.lambda = lambda;
    row.capacity = cap(superlevel_set(MF, lambda));
    for (const auto& M : Mi) row.component_bound += cap(superlevel_set(M, lambda / m));
    rows.push_back(row);
  }
  return rows;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0) || !(x[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++count;
  }
  if (count < 2) throw InputError("slope fit needs two positive samples");
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

SubadditivityReport subadditivity_check(const RegionMask& E, const std::vector<RegionMask>& parts,
                                        const KernelSpec& spec, double p, const CapacityOptions& options,
                                        std::optional<Grid> support) {
  if (parts.empty()) throw InputError("subadditivity check needs at least one part");
  RegionMask cover(E.grid());
  for (const auto& part : parts) cover = cover | part;
  if (!E.subset_of(cover)) throw InputError("cover violation: parts do not cover E");
  const Grid sup = support ? *support : default_support(E.empty() ? cover : E, 0.5);

  SubadditivityReport rep;
  CapacityEstimate whole = estimate_capacity(CapacityProblem{E, spec, p, sup}, options);
  rep.lhs = whole.value;
  ScalarField combined(sup);
  for (const auto& part : parts) {
    CapacityEstimate est = estimate_capacity(CapacityProblem{part, spec, p, sup}, options);
    rep.parts.push_back(est.value);
    rep.rhs += est.value;
    for (std::size_t i = 0; i < combined.size(); ++i) combined[i] = std::max(combined[i], est.density[i]);
  }
  for (std::size_t i = 0; i < combined.size(); ++i) rep.sup_value += std::pow(combined[i], p);
  rep.sup_value *= sup.cell_volume();
  rep.sup_margin = E.empty() ? 0.0 : min_potential_on(combined, map_to_support(E, sup), spec) - 1.0;
  return rep;
}

MeasureCapacityReport measure_capacity_check(const RegionMask& E, const KernelSpec& spec, double p,
                                             const CapacityOptions& options) {
  const int n = E.grid().dim();
  MeasureCapacityReport rep;
  if (p > 1.0) {
    rep.exponent = p / sobolev_conjugate(n, spec.alpha, p);
    rep.exponent_rule = "p/p*";
  } else {
    rep.exponent = (n - spec.alpha) / n;
    rep.exponent_rule = "(n-alpha)/n";
  }
  rep.measure = E.measure();
  rep.measure_power = rep.measure > 0.0 ? std::pow(rep.measure, rep.exponent) : 0.0;
  rep.capacity = E.empty() ? 0.0 : estimate_capacity(CapacityProblem{E, spec, p, std::nullopt}, options).value;
  return rep;
}

}  // namespace rieszlab

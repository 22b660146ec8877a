#include <cmath>

#include "doctest.h"
#include "rieszlab/generators.hpp"
#include "rieszlab/grid_ops.hpp"
#include "rieszlab/truncation.hpp"

using namespace rieszlab;

TEST_CASE("precise representative of a smooth field") {
  const Grid g = Grid::cube(1, 1025, -1.0, 1.0);
  const ScalarField f = gen::bump(g, {0, 0, 0}, 0.8);
  const double lip = vector_magnitude(gradient(f)).max();
  const PreciseRepresentative rep = precise_representative(f, default_precise_ladder(g));
  CHECK(rep.nonconvergent.empty());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(rep.values[i] - f[i]) <= 2 * lip * g.spacing());
}

TEST_CASE("precise representative at a jump") {
  const Grid g = Grid::cube(1, 101, -1.0, 1.0);
  const ScalarField f = gen::half_space_indicator(g);
  const PreciseRepresentative rep = precise_representative(f, default_precise_ladder(g));
  CHECK(!rep.nonconvergent[50]);
  CHECK(rep.values[50] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(precise_representative(f, {3 * g.spacing(), 2 * g.spacing(), g.spacing()}), InputError);
}

TEST_CASE("oscillating profile is flagged") {
  const Grid g = Grid::cube(1, 201, -1.0, 1.0);
  const PreciseRepresentative rep = precise_representative(gen::oscillatory(g, {0, 0, 0}), default_precise_ladder(g));
  CHECK(rep.nonconvergent[100]);
  CHECK(rep.values[100] == 0.0);
}

TEST_CASE("truncation sets of a linear field") {
  const Grid g = Grid::cube(2, 33, -1.0, 1.0);
  const ScalarField f = gen::linear(g, {3.0, 4.0, 0});
  const auto sets = truncation_sets(f, {4.9, 5.0 * (1 + 1e-9), 6.0});
  CHECK(sets[0].empty());
  CHECK(sets[1].count() == g.size());
  CHECK(sets[0].subset_of(sets[1]));
  CHECK(sets[1].subset_of(sets[2]));
}

TEST_CASE("truncation sets exclude the singular point") {
  const Grid g = Grid::cube(2, 65, -1.0, 1.0);
  const ScalarField f = gen::singular(g, {0, 0, 0}, 0.5, 2 * g.spacing());
  const ScalarField M = gradient_maximal(f);
  const std::size_t origin = g.ravel({32, 32, 0});
  const auto sets = truncation_sets_from(M, {0.25 * M[origin], 0.5 * M[origin], 0.99 * M[origin]});
  for (const auto& A : sets) CHECK(!A[origin]);
  CHECK(sets[0].subset_of(sets[1]));
  CHECK(sets[1].subset_of(sets[2]));
}

TEST_CASE("chain estimates on constant and linear fields") {
  const Grid g = Grid::cube(2, 41, -1.0, 1.0);
  const double h = g.spacing();
  const std::size_t x = g.ravel({18, 20, 0}), y = g.ravel({22, 21, 0});
  const ScalarField c(g, 2.0);
  const RegionMask all(g, true);
  const ChainSides s = chain_estimate_check(c, precise_representative(c, default_precise_ladder(g)), all, x, y,
                                            4 * h, 2 * h, 1.0);
  CHECK(s.nested.lhs == doctest::Approx(0.0));
  CHECK(s.to_precise.lhs == doctest::Approx(0.0));
  CHECK(s.shifted.lhs == doctest::Approx(0.0));

  const ScalarField f = gen::linear(g, {0.6, -0.8, 0});
  const ChainSides t = chain_estimate_check(f, precise_representative(f, default_precise_ladder(g)), all, x, y,
                                            4 * h, 2 * h, 1.0);
  CHECK(t.shifted.ratio() <= 1.0 + 1e-12);
  CHECK_THROWS_WITH_AS(chain_estimate_check(f, precise_representative(f, default_precise_ladder(g)), all, x, x,
                                            4 * h, 2 * h, 1.0),
                       "precondition violated", InputError);
  CHECK_THROWS_AS(chain_estimate_check(f, precise_representative(f, default_precise_ladder(g)), RegionMask(g), x, y,
                                       4 * h, 2 * h, 1.0),
                  InputError);
}

TEST_CASE("Lipschitz modulus") {
  const Grid g = Grid::cube(2, 33, -1.0, 1.0);
  const RegionMask inner = box_mask(g, {-0.7, -0.7, 0}, {0.7, 0.7, 0});
  const ScalarField f = gen::linear(g, {0.6, -0.8, 0});
  const PreciseRepresentative rep = precise_representative(f, default_precise_ladder(g));
  // all pairs, then sampled pairs
  CHECK(std::abs(lipschitz_modulus(rep, inner, 1, 1u << 24) - 1.0) <= 1e-10);
  CHECK(lipschitz_modulus(rep, inner, 1, 1000) <= 1.0 + 1e-10);
  const ScalarField c(g, 1.0);
  CHECK(lipschitz_modulus(precise_representative(c, default_precise_ladder(g)), inner, 1) == 0.0);
}

TEST_CASE("cutoff") {
  const Grid g = Grid::cube(1, 101, -1.0, 1.0);
  Box in, out;
  in.lo[0] = -0.5;
  in.hi[0] = 0.5;
  out.lo[0] = -0.8;
  out.hi[0] = 0.8;
  const ScalarField z = cutoff(g, in, out);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = std::abs(g.node(i)[0]);
    if (x <= 0.5) CHECK(z[i] == 1.0);
    if (x >= 0.8) CHECK(z[i] == 0.0);
    CHECK(z[i] >= 0.0);
    CHECK(z[i] <= 1.0);
  }
}

namespace {

std::vector<Box> nested_boxes(int n, std::initializer_list<double> halfwidths) {
  std::vector<Box> out;
  for (double w : halfwidths) {
    Box b;
    for (int a = 0; a < n; ++a) {
      b.lo[a] = -w;
      b.hi[a] = w;
    }
    out.push_back(b);
  }
  return out;
}

}  // namespace

TEST_CASE("exhaustion of a smooth field covers the first box") {
  const Grid g = Grid::cube(2, 33, -1.0, 1.0);
  ExhaustionOptions opt;
  opt.omega_boxes = nested_boxes(2, {0.4, 0.6, 0.8});
  const TruncationDecomposition dec = exhaustion(gen::bump(g, {0, 0, 0}, 0.9), opt);
  REQUIRE(dec.levels.size() == 3);
  CHECK(box_mask(g, opt.omega_boxes[0].lo, opt.omega_boxes[0].hi).subset_of(dec.levels[0].C));
  for (std::size_t l = 0; l < dec.levels.size(); ++l) {
    CHECK(dec.levels[l].max_grad_maximal <= dec.levels[l].alpha);
    CHECK(std::pow(dec.levels[l].alpha, opt.p) >= std::ldexp(dec.levels[l].grad_norm_pow, static_cast<int>(l + 1)));
    if (l > 0) CHECK(dec.levels[l - 1].C.subset_of(dec.levels[l].C));
    CHECK((dec.levels[l].C & dec.residual).empty());
  }
  CHECK(!dec.residual_capacity);
}

TEST_CASE("exhaustion of a singular map") {
  const Grid g = Grid::cube(2, 65, -1.0, 1.0);
  const VectorField F = gen::singular_map(g, {0, 0, 0}, 0.5, 2 * g.spacing(), 0.5);
  ExhaustionOptions opt;
  opt.omega_boxes = nested_boxes(2, {0.5, 0.7, 0.85});
  opt.k = 2;
  const TruncationDecomposition dec = exhaustion(F, opt);
  REQUIRE(dec.residual_capacity);
  const CapacityEstimate ball = estimate_capacity(
      CapacityProblem{ball_mask(g, {0, 0, 0}, 3 * g.spacing()), KernelSpec::make(2, 1.0), 1.0, std::nullopt});
  CHECK(dec.residual_capacity->value <= ball.value);
  for (std::size_t l = 1; l < dec.levels.size(); ++l) CHECK(dec.levels[l - 1].C.subset_of(dec.levels[l].C));
}

TEST_CASE("exhaustion input errors") {
  const Grid g = Grid::cube(2, 17, -1.0, 1.0);
  const ScalarField f = gen::bump(g, {0, 0, 0}, 0.5);
  ExhaustionOptions opt;
  CHECK_THROWS_AS(exhaustion(f, opt), InputError);
  opt.omega_boxes = nested_boxes(2, {0.6, 0.4});
  CHECK_THROWS_AS(exhaustion(f, opt), InputError);
  opt.omega_boxes = nested_boxes(2, {0.4, 0.6});
  opt.J = 3;
  CHECK_THROWS_AS(exhaustion(f, opt), InputError);
  opt.J = 0;
  opt.alpha_cap = 0.5;
  CHECK_THROWS_WITH_AS(exhaustion(f, opt), doctest::Contains("unachievable"), InputError);
}

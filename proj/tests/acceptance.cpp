// Acceptance harness: one PASS/FAIL line per criterion, exit status 0 only
// when every criterion passes. Usage: rieszlab_acceptance [work_dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "rieszlab/area.hpp"
#include "rieszlab/capacity.hpp"
#include "rieszlab/experiment.hpp"
#include "rieszlab/field_io.hpp"
#include "rieszlab/generators.hpp"
#include "rieszlab/maximal.hpp"
#include "rieszlab/parallel.hpp"
#include "rieszlab/riesz.hpp"
#include "rieszlab/truncation.hpp"

using namespace rieszlab;
namespace ex = rieszlab::experiment;
namespace fs = std::filesystem;
using json = ex::json;

namespace {

fs::path work;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json run_one(const json& cfg, const fs::path& dir, std::uint64_t seed = 0) {
  const ex::RunResult r = ex::run(cfg, ex::RunContext{dir, dir / "out", seed, 1});
  ex::write_report(r, dir / "out");
  return r.records.size() == 1 ? r.records[0] : json(r.records);
}

bool all_invariants(const json& rec) {
  for (const auto& [_, v] : rec.at("invariants").items())
    if (!v.get<bool>()) return false;
  return true;
}

fs::path fresh(const std::string& name) {
  const fs::path d = work / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

json boxes(std::initializer_list<double> halfwidths) {
  json out = json::array();
  for (double w : halfwidths) out.push_back({{"lo", {-w, -w}}, {"hi", {w, w}}});
  return out;
}

// 1. Area formula on closed-form maps.
void criterion_area(Verdict& v) {
  AreaFormulaReport id[2];
  for (int n : {1, 2}) {
    const Grid g = Grid::cube(n, 256, 0.0, 1.0);
    id[n - 1] = verify_area_formula(
        MappingProblem{gen::identity_map(g), ScalarField(g, 1.0), RegionMask(g, true), RegionMask(), {}});
    v.require(id[n - 1].rel_error <= 1e-3, "identity rel_error");
  }
  const Grid line = Grid::cube(1, 2001, -1.0, 1.0);
  AreaOptions o1;
  o1.hy = 1e-3;
  const AreaFormulaReport f1 = verify_area_formula(
      MappingProblem{gen::fold(line), ScalarField(line, 1.0), RegionMask(line, true), RegionMask(), {}}, o1);
  v.require(f1.lhs >= 1.98 && f1.lhs <= 2.02 && f1.rhs >= 1.98 && f1.rhs <= 2.02, "1D fold range");
  const Grid sq = Grid::cube(2, 512, -1.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  const AreaFormulaReport f2 = verify_area_formula(
      MappingProblem{gen::fold(sq), ScalarField(sq, 1.0), RegionMask(sq, true), RegionMask(), {}});
  const double t = seconds_since(t0);
  v.require(f2.rel_error <= 0.02, "2D fold rel_error");
  v.require(t <= 60.0, "2D fold time");
  v.detail << "identity rel " << id[0].rel_error << ", " << id[1].rel_error << "; fold1d lhs " << f1.lhs << " rhs "
           << f1.rhs << "; fold2d rel " << f2.rel_error << " in " << std::setprecision(3) << t << " s";
}

// Shared end-to-end run on the point-singular planar map; feeds 2 and 3.
struct Pipeline {
  json exhaustion, area, ball, area_fold;
};

Pipeline run_pipeline() {
  Pipeline p;
  const fs::path d = fresh("pipeline");
  ex::generate("singular-map", {{"shape", "129"}, {"gamma", "0.5"}, {"mollify", "2h"}, {"c", "0.5"}}, d);
  ex::generate("mask-ball", {{"shape", "129"}, {"radius", "3h"}, {"stem", "ball3h"}}, d);
  p.exhaustion = run_one({{"kind", "exhaustion"},
                          {"field_file", "singular-map.json"},
                          {"omega_boxes", boxes({0.5, 0.7, 0.85})},
                          {"k", 2},
                          {"p", 1.0},
                          {"output_prefix", "exh"}},
                         d);
  p.ball = run_one({{"kind", "capacity"}, {"alpha", 1.0}, {"p", 1.0}, {"mask_file", "ball3h.json"}}, d);
  p.area = run_one({{"kind", "area"},
                    {"phi_file", "singular-map.json"},
                    {"exhaustion_manifest", "out/exh_manifest.json"},
                    {"tolerance", 0.02}},
                   d);

  // Same structure on a map with folds and a weight, with a nonempty S.
  const fs::path e = fresh("pipeline_fold");
  ex::generate("fold2d", {{"shape", "129"}}, e);
  ex::generate("random-smooth", {{"shape", "129"}, {"seed", "3"}}, e);
  ex::generate("mask-ball", {{"shape", "129"}, {"center", "0.3,0.2"}, {"radius", "0.1"}, {"stem", "S"}}, e);
  json levels = json::array();
  for (double w : {0.3, 0.6, 1.0}) {
    const std::string name = "box" + std::to_string(levels.size());
    ex::generate("mask-box", {{"shape", "129"}, {"box_lo", std::to_string(-w) + "," + std::to_string(-w)},
                              {"box_hi", std::to_string(w) + "," + std::to_string(w)}, {"stem", name}}, e);
    levels.push_back({{"C", name + ".json"}});
  }
  ex::generate("mask-box", {{"shape", "129"}, {"box_lo", "-1,-1"}, {"box_hi", "1,1"}, {"stem", "domain"}}, e);
  std::ofstream(e / "manifest.json") << json{{"domain", "domain.json"}, {"residual", "S.json"}, {"levels", levels}}.dump();
  p.area_fold = run_one({{"kind", "area"}, {"phi_file", "fold2d.json"}, {"exhaustion_manifest", "manifest.json"}}, e);
  return p;
}

void check_partials(Verdict& v, const json& rec, const std::string& tag) {
  const json& r = rec.at("result");
  const auto pl = r.at("partial_lhs").get<std::vector<double>>();
  const auto pr = r.at("partial_rhs").get<std::vector<double>>();
  bool mono = true;
  for (std::size_t m = 1; m < pl.size(); ++m) mono = mono && pl[m] >= pl[m - 1] && pr[m] >= pr[m - 1];
  const double dl = std::abs(pl.back() - r.at("lhs").get<double>());
  const double dr = std::abs(pr.back() - r.at("rhs").get<double>());
  v.require(mono, tag + " partials nondecreasing");
  v.require(dl <= 1e-12 * std::max(1.0, r.at("lhs").get<double>()) &&
                dr <= 1e-12 * std::max(1.0, r.at("rhs").get<double>()),
            tag + " partials match direct");
  v.detail << tag << ": " << pl.size() << " levels, final vs direct " << std::max(dl, dr) << "; ";
}

// 2. Exhaustion structure of the area formula.
void criterion_partials(Verdict& v, const Pipeline& p) {
  check_partials(v, p.area, "singular map");
  check_partials(v, p.area_fold, "fold with S");
}

// 3. Residual capacity and the area formula off S.
void criterion_pipeline(Verdict& v, const Pipeline& p) {
  const json& ex = p.exhaustion.at("result");
  const double s_cap = ex.at("residual_capacity").get<double>();
  const double ball = p.ball.at("result").at("value").get<double>();
  const double rel = p.area.at("result").at("rel_error").get<double>();
  v.require(all_invariants(p.exhaustion), "exhaustion invariants");
  v.require(s_cap <= ball, "cap(S) <= cap(3h ball)");
  v.require(rel <= 0.02 && p.area.at("result").at("valid").get<bool>(), "area rel_error");
  v.detail << "|S| = " << ex.at("residual_count") << " nodes, cap(S) " << s_cap << " <= cap(B_3h) " << ball
           << "; area rel " << rel;
}

// 4. Lipschitz truncation on the singular field and the chain estimates.
void criterion_truncation(Verdict& v) {
  const fs::path d = fresh("truncation");
  ex::generate("singular", {{"n", "1"}, {"shape", "8193"}, {"lo", "-4"}, {"hi", "4"}, {"gamma", "0.5"},
                            {"mollify", "2h"}},
               d);
  const json t = run_one({{"kind", "truncation"},
                          {"field_file", "singular.json"},
                          {"alphas", {1, 2, 4, 8}},
                          {"pairs", 100000000}},
                         d, 1);
  const json& r = t.at("result");
  const double spread = r.value("ratio_spread", 1e300);
  v.require(spread <= 2.5, "modulus/alpha spread");
  v.detail << "modulus/alpha";
  for (const auto& lev : r.at("levels")) v.detail << " " << std::setprecision(3) << lev.value("modulus_over_alpha", 0.0);
  v.detail << " (spread " << spread << ")";
  // measure variant: alpha^p |complement| stays bounded (p = 1)
  double prod_max = 0.0, prod_min = 1e300;
  for (const auto& lev : r.at("levels")) {
    const double prod = lev.at("alpha").get<double>() * lev.at("complement_measure").get<double>();
    prod_max = std::max(prod_max, prod);
    prod_min = std::min(prod_min, prod);
  }
  v.detail << "; alpha|compl| in [" << prod_min << ", " << prod_max << "]";

  int violations = 0;
  for (int dim : {1, 2}) {
    const json c = run_one({{"kind", "chain_checks"}, {"dim", dim}, {"shape", dim == 1 ? 257 : 49}, {"cases", 100}},
                           fresh("chain" + std::to_string(dim)), 7);
    for (const char* name : {"nested_averages", "precise_vs_average", "shifted_centers"})
      violations += c.at("result").at(name).at("violations").get<int>();
  }
  v.require(violations == 0, "chain violations");
  v.detail << "; chain violations " << violations << " over 2 x 100 cases";
}

// 5. Weak-type decay of capacities of superlevel sets of Mf.
void criterion_weak_type(Verdict& v) {
  const fs::path d = fresh("weak");
  ex::generate("bump", {{"shape", "65"}, {"radius", "0.3"}}, d);
  const ScalarField f = io::read_scalar_field(d / "bump.json");
  const double top = maximal_function(f, RadiusLadder::for_grid(f.grid())).max();
  const double p = 1.0;
  const json w = run_one({{"kind", "weak_type"},
                          {"field_file", "bump.json"},
                          {"k", 1},
                          {"p", p},
                          {"lambda_range", json::object({{"lo", 0.097 * top}, {"hi", 0.97 * top}, {"count", 6}})}},
                         d);
  const double slope = w.at("result").at("slope").get<double>();
  double lo = 1e300, hi = 0.0;
  for (const auto& row : w.at("result").at("rows")) {
    lo = std::min(lo, row.at("lambda_p_capacity").get<double>());
    hi = std::max(hi, row.at("lambda_p_capacity").get<double>());
  }
  v.require(slope <= -0.7 * p, "slope");
  v.require(all_invariants(w), "capacity nonincreasing");
  v.detail << "slope " << slope << " over lambda in [0.097, 0.97] max Mf; lambda^p cap in [" << lo << ", " << hi << "]";
}

// 6. Capacity laws.
void criterion_capacity(Verdict& v) {
  const Grid g = Grid::cube(2, 25, -1.0, 1.0);
  const KernelSpec s = KernelSpec::make(2, 0.5);
  const double empty = estimate_capacity(CapacityProblem{RegionMask(g), s, 2.0, std::nullopt}).value;
  v.require(empty == 0.0, "empty set");

  const RegionMask frame = box_mask(g, {-0.6, -0.6, 0}, {0.6, 0.6, 0});
  const Grid sup = default_support(frame, 0.5);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.45, 0.45), rad(0.08, 0.25);
  int mono_bad = 0, sub_bad = 0;
  for (int c = 0; c < 50; ++c) {
    const double p = c % 2 == 0 ? 2.0 : 1.0;
    const RegionMask a = ball_mask(g, {u(rng), u(rng), 0}, rad(rng)) & frame;
    const RegionMask b = ball_mask(g, {u(rng), u(rng), 0}, rad(rng)) & frame;
    const RegionMask E = a | b;
    const double ca = estimate_capacity(CapacityProblem{a, s, p, sup}).value;
    const double cb = estimate_capacity(CapacityProblem{b, s, p, sup}).value;
    const double cE = estimate_capacity(CapacityProblem{E, s, p, sup}).value;
    if (ca > cE * (1 + 1e-6) || cb > cE * (1 + 1e-6)) ++mono_bad;
    if (cE > (ca + cb) * (1 + 1e-6)) ++sub_bad;
  }
  v.require(mono_bad == 0, "monotonicity");
  v.require(sub_bad == 0, "subadditivity");

  const Grid big = Grid::cube(2, 49, -1.0, 1.0);
  std::vector<double> lam, cap;
  for (double l : {1.0, 1.5, 2.0}) {
    lam.push_back(l);
    cap.push_back(estimate_capacity(CapacityProblem{ball_mask(big, {0, 0, 0}, 0.125 * l), s, 2.0, std::nullopt}).value);
  }
  const double slope = log_log_slope(lam, cap);
  v.require(std::abs(slope - 1.0) <= 0.3, "scaling slope");
  v.detail << "empty " << empty << "; 50 cases: " << mono_bad << " monotonicity, " << sub_bad
           << " subadditivity violations; dilation slope " << slope << " (n - alpha p = 1)";
}

// 7. Riesz kernel and potentials.
void criterion_riesz(Verdict& v) {
  const double k = kernel_value(KernelSpec::make(3, 2.0), {1.0, 0, 0});
  const double kerr = std::abs(k - 1.0 / (4 * std::numbers::pi));
  v.require(kerr <= 1e-10, "Newtonian kernel");
  const Grid g3 = Grid::cube(3, 61, -1.2, 1.2);
  const double centre =
      riesz_potential(gen::ball_indicator(g3, {0, 0, 0}, 1.0), KernelSpec::make(3, 2.0))[g3.ravel({30, 30, 30})];
  v.require(std::abs(centre - 0.5) <= 0.02 * 0.5, "ball potential");

  const fs::path d = fresh("potential");
  ex::generate("random-smooth", {{"shape", "65"}, {"seed", "4"}}, d);
  const json pr = run_one(
      {{"kind", "potential"}, {"field_file", "random-smooth.json"}, {"alpha", 0.7}, {"compare_direct", true}}, d);
  const double rel = pr.at("result").at("direct_vs_fft_rel").get<double>();
  v.require(rel <= 1e-8, "direct vs FFT");
  v.detail << "kernel error " << kerr << "; ball centre " << centre << " (0.5); direct vs fft " << rel;
}

// 8. Average identities.
void criterion_identities(Verdict& v) {
  const json r = run_one({{"kind", "identity_checks"}, {"shapes", {33, 65, 129}}}, fresh("identities"), 1);
  const json q = run_one({{"kind", "identity_checks"}, {"dim", 3}, {"shapes", {17, 25, 33}}, {"generator", "bump"}},
                         fresh("identities3"), 1);
  v.require(all_invariants(r), "2D identity invariants");
  v.require(q.at("invariants").at("kernel_ratio_stable").get<bool>(), "3D kernel ratio");
  v.detail << "telescoping order " << r.at("result").at("telescoping_order") << "; kernel ratio spread "
           << r.at("result").at("kernel_ratio_spread") << " (2D), " << q.at("result").at("kernel_ratio_spread")
           << " (3D)";
}

// 9. Maximal function value and nesting of sublevel sets.
void criterion_maximal(Verdict& v) {
  const Grid g = Grid::cube(1, 4001, -5.0, 5.0);
  const RadiusLadder L = RadiusLadder::for_grid(g);
  const ScalarField M = maximal_function(gen::box_indicator(g, {0, 0, 0}, {1, 0, 0}), L);
  const double at2 = M[g.ravel(g.nearest({2.0, 0, 0}))];
  const double tol = 2 * g.spacing() + (L.ratio() - 1) / 4;
  v.require(std::abs(at2 - 0.25) <= tol, "M(chi)(2)");

  int suites = 0, broken = 0;
  for (const char* name : {"bump", "singular", "random-smooth", "indicator-box", "oscillatory"}) {
    const fs::path d = fresh(std::string("maximal_") + name);
    ex::generate(name, {{"shape", "49"}}, d);
    json lambdas = json::array();
    for (int i = 1; i <= 40; ++i) lambdas.push_back(0.05 * i);
    const json rec = run_one({{"kind", "maximal"}, {"field_file", std::string(name) + ".json"}, {"lambdas", lambdas}}, d);
    ++suites;
    if (!rec.at("invariants").at("sublevel_nesting").get<bool>()) ++broken;
  }
  v.require(broken == 0, "nesting");
  v.detail << "M(chi_[0,1])(2) = " << at2 << " (tolerance " << tol << "); nesting broken in " << broken << " of "
           << suites << " suites";
}

// 10. Re-running every experiment kind gives identical records and files.
void criterion_determinism(Verdict& v) {
  const fs::path d = fresh("determinism");
  ex::generate("bump", {{"shape", "33"}, {"radius", "0.5"}}, d);
  ex::generate("singular", {{"shape", "33"}}, d);
  ex::generate("fold2d", {{"shape", "33"}}, d);
  ex::generate("mask-ball", {{"shape", "33"}, {"radius", "0.2"}}, d);
  const std::vector<json> configs{
      {{"kind", "maximal"}, {"field_file", "bump.json"}, {"lambdas", {0.1, 0.5}}},
      {{"kind", "potential"}, {"field_file", "bump.json"}, {"alpha", 0.5}},
      {{"kind", "capacity"}, {"alpha", 0.5}, {"p", 1.5}, {"mask_file", "mask-ball.json"}, {"density_file", "phi.json"}},
      {{"kind", "weak_type"}, {"field_file", "bump.json"}, {"k", 1}, {"lambdas", {0.2, 0.6}}},
      {{"kind", "truncation"}, {"field_file", "singular.json"}, {"alphas", {1, 2}}},
      {{"kind", "exhaustion"}, {"field_file", "singular.json"}, {"omega_boxes", boxes({0.5, 0.8})}, {"k", 2}, {"p", 1.0}},
      {{"kind", "area"}, {"phi_file", "fold2d.json"}},
      {{"kind", "chain_checks"}, {"shape", 49}, {"cases", 10}, {"calibration_cases", 5}},
      {{"kind", "identity_checks"}, {"shapes", {17, 33}}}};
  int differing = 0;
  for (const auto& cfg : configs) {
    std::string dumps[2];
    std::vector<std::string> files[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = d / ("run" + std::to_string(rep));
      fs::remove_all(out);
      const ex::RunResult r = ex::run(cfg, ex::RunContext{d, out, 42, rep == 0 ? 1 : 3});
      ex::write_report(r, out);
      for (const auto& rec : r.records) dumps[rep] += ex::without_timing(rec).dump() + "\n";
      for (const auto& entry : fs::directory_iterator(out)) {
        const auto name = entry.path().filename().string();
        if (name == "report.jsonl" || name == "summary.txt") continue;
        std::ifstream is(entry.path(), std::ios::binary);
        files[rep].push_back(name + ":" + std::string(std::istreambuf_iterator<char>(is), {}));
      }
      std::sort(files[rep].begin(), files[rep].end());
    }
    if (dumps[0] != dumps[1] || files[0] != files[1]) {
      ++differing;
      v.detail << " differs: " << cfg.at("kind").get<std::string>() << ";";
    }
  }
  v.require(differing == 0, "byte-identical reports");
  v.detail << configs.size() << " experiment kinds re-run (1 and 3 threads): " << differing
           << " differ (wall_time excluded)";
}

}  // namespace

int main(int argc, char** argv) {
  work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rieszlab_acceptance";
  fs::create_directories(work);
  set_thread_count(1);
  std::cout << std::setprecision(4);

  Pipeline pipeline;
  std::string pipeline_error;
  try {
    pipeline = run_pipeline();
  } catch (const std::exception& e) {
    pipeline_error = e.what();
  }
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"area formula, closed-form maps", criterion_area},
      {"exhaustion partial sums", [&](Verdict& v) { criterion_partials(v, pipeline); }},
      {"singular map pipeline", [&](Verdict& v) { criterion_pipeline(v, pipeline); }},
      {"Lipschitz truncation", criterion_truncation},
      {"weak-type decay", criterion_weak_type},
      {"capacity laws", criterion_capacity},
      {"Riesz kernel and potential", criterion_riesz},
      {"average identities", criterion_identities},
      {"maximal function", criterion_maximal},
      {"determinism", criterion_determinism}};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    v.detail << std::setprecision(4);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if ((i == 1 || i == 2) && !pipeline_error.empty()) throw std::runtime_error(pipeline_error);
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [error: " << e.what() << "]";
    }
    set_thread_count(1);
    if (!v.pass) ++failed;
    std::cout << "criterion " << std::setw(2) << i + 1 << ": " << (v.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << ": " << v.detail.str() << " (" << std::fixed << std::setprecision(1)
              << seconds_since(t0) << " s)" << std::defaultfloat << std::setprecision(4) << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

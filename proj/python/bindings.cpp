#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rieszlab/area.hpp"
#include "rieszlab/capacity.hpp"
#include "rieszlab/experiment.hpp"
#include "rieszlab/maximal.hpp"
#include "rieszlab/riesz.hpp"
#include "rieszlab/truncation.hpp"

namespace py = pybind11;
using namespace rieszlab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Flags = py::array_t<bool, py::array::c_style | py::array::forcecast>;

std::vector<py::ssize_t> grid_shape(const Grid& g) {
  std::vector<py::ssize_t> s;
  for (int a = 0; a < g.dim(); ++a) s.push_back(static_cast<py::ssize_t>(g.extent(a)));
  return s;
}

void expect_shape(const Grid& g, const py::buffer_info& b, int trailing, const char* what) {
  auto want = grid_shape(g);
  if (trailing > 0) want.push_back(trailing);
  if (b.shape != want) throw py::value_error(std::string(what) + ": array shape does not match the grid");
}

ScalarField to_scalar(const Grid& g, const Array& a) {
  const auto b = a.request();
  expect_shape(g, b, 0, "field");
  const auto* p = static_cast<const double*>(b.ptr);
  return ScalarField(g, std::vector<double>(p, p + g.size()));
}

VectorField to_vector(const Grid& g, const Array& a) {
  const auto b = a.request();
  if (b.ndim != g.dim() + 1) throw py::value_error("vector field: expected grid shape plus a component axis");
  const int m = static_cast<int>(b.shape.back());
  expect_shape(g, b, m, "vector field");
  const auto* p = static_cast<const double*>(b.ptr);
  return VectorField(g, m, std::vector<double>(p, p + g.size() * static_cast<std::size_t>(m)));
}

RegionMask to_mask(const Grid& g, const Flags& a) {
  const auto b = a.request();
  expect_shape(g, b, 0, "mask");
  const auto* p = static_cast<const bool*>(b.ptr);
  std::vector<std::uint8_t> flags(p, p + g.size());
  return RegionMask(g, std::move(flags));
}

py::array_t<double> from_scalar(const ScalarField& f) {
  py::array_t<double> out(grid_shape(f.grid()));
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

py::array_t<bool> from_mask(const RegionMask& m) {
  py::array_t<bool> out(grid_shape(m.grid()));
  std::copy(m.flags().begin(), m.flags().end(), out.mutable_data());
  return out;
}

py::object to_python(const experiment::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Maximal functions, Riesz potentials and capacities, Lipschitz truncation and the area formula on grids";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  py::class_<Grid>(m, "Grid")
      .def(py::init([](std::vector<std::size_t> shape, std::vector<double> origin, double spacing) {
             return Grid(static_cast<int>(shape.size()), shape, origin, spacing);
           }),
           py::arg("shape"), py::arg("origin"), py::arg("spacing"))
      .def_static("cube", &Grid::cube, py::arg("dim"), py::arg("nodes"), py::arg("lo"), py::arg("hi"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("spacing", &Grid::spacing)
      .def_property_readonly("shape", [](const Grid& g) { return grid_shape(g); })
      .def_property_readonly("origin", [](const Grid& g) {
        return std::vector<double>(g.origin().begin(), g.origin().begin() + g.dim());
      })
      .def("coordinates", [](const Grid& g) {
        auto shape = grid_shape(g);
        shape.push_back(g.dim());
        py::array_t<double> out(shape);
        double* p = out.mutable_data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const Point x = g.node(i);
          for (int a = 0; a < g.dim(); ++a) *p++ = x[a];
        }
        return out;
      })
      .def("__repr__", [](const Grid& g) {
        std::string s = "Grid(dim=" + std::to_string(g.dim()) + ", shape=(";
        for (int a = 0; a < g.dim(); ++a) s += (a ? ", " : "") + std::to_string(g.extent(a));
        return s + "), spacing=" + std::to_string(g.spacing()) + ")";
      });

  m.def("kernel_value", [](int dim, double alpha, std::vector<double> x) {
    Point p{0, 0, 0};
    if (x.size() != static_cast<std::size_t>(dim)) throw py::value_error("point must have dim entries");
    std::copy(x.begin(), x.end(), p.begin());
    return kernel_value(KernelSpec::make(dim, alpha), p);
  }, py::arg("dim"), py::arg("alpha"), py::arg("x"));

  m.def("maximal_function", [](const Grid& g, const Array& f) {
    return from_scalar(maximal_function(to_scalar(g, f), RadiusLadder::for_grid(g)));
  }, py::arg("grid"), py::arg("f"));

  m.def("riesz_potential", [](const Grid& g, const Array& phi, double alpha, const std::string& method) {
    if (method != "fft" && method != "direct") throw py::value_error("method must be 'fft' or 'direct'");
    return from_scalar(riesz_potential(to_scalar(g, phi), KernelSpec::make(g.dim(), alpha),
                                       method == "fft" ? PotentialMethod::Fft : PotentialMethod::Direct));
  }, py::arg("grid"), py::arg("phi"), py::arg("alpha"), py::arg("method") = "fft");

  m.def("capacity", [](const Grid& g, const Flags& target, double alpha, double p, double padding) {
    const CapacityEstimate est =
        estimate_capacity(CapacityProblem{to_mask(g, target), KernelSpec::make(g.dim(), alpha), p, std::nullopt, padding});
    py::dict d;
    d["value"] = est.value;
    d["margin"] = est.margin;
    d["iterations"] = est.iterations;
    d["converged"] = est.converged;
    d["density"] = from_scalar(est.density);
    d["support_shape"] = grid_shape(est.support);
    d["support_origin"] = std::vector<double>(est.support.origin().begin(), est.support.origin().begin() + est.support.dim());
    return d;
  }, py::arg("grid"), py::arg("target"), py::arg("alpha"), py::arg("p") = 2.0, py::arg("padding") = 0.5);

  m.def("precise_representative", [](const Grid& g, const Array& f, double eps_c) {
    const PreciseRepresentative rep = precise_representative(to_scalar(g, f), default_precise_ladder(g), eps_c);
    return py::make_tuple(from_scalar(rep.values), from_mask(rep.nonconvergent));
  }, py::arg("grid"), py::arg("f"), py::arg("eps_c") = 0.0);

  m.def("truncation_sets", [](const Grid& g, const Array& f, std::vector<double> alphas) {
    py::list out;
    for (const auto& A : truncation_sets(to_scalar(g, f), alphas)) out.append(from_mask(A));
    return out;
  }, py::arg("grid"), py::arg("f"), py::arg("alphas"));

  m.def("lipschitz_modulus", [](const Grid& g, const Array& f, const Flags& mask, std::uint64_t seed,
                                std::size_t pairs) {
    const PreciseRepresentative rep = precise_representative(to_scalar(g, f), default_precise_ladder(g));
    return lipschitz_modulus(rep, to_mask(g, mask), seed, pairs);
  }, py::arg("grid"), py::arg("f"), py::arg("mask"), py::arg("seed") = 0, py::arg("pairs") = 1000);

  m.def("jacobian", [](const Grid& g, const Array& phi) { return from_scalar(jacobian(to_vector(g, phi))); },
        py::arg("grid"), py::arg("phi"));

  m.def("area_formula", [](const Grid& g, const Array& phi, std::optional<Array> weight,
                           std::optional<Flags> domain, double hy) {
    MappingProblem prob{to_vector(g, phi), weight ? to_scalar(g, *weight) : ScalarField(g, 1.0),
                        domain ? to_mask(g, *domain) : RegionMask(g, true), RegionMask(), {}};
    AreaOptions opt;
    opt.hy = hy;
    const AreaFormulaReport r = verify_area_formula(prob, opt);
    py::dict d;
    d["lhs"] = r.lhs;
    d["rhs"] = r.rhs;
    d["rel_error"] = r.rel_error;
    d["valid"] = r.valid;
    d["histogram"] = r.histogram;
    return d;
  }, py::arg("grid"), py::arg("phi"), py::arg("weight") = py::none(), py::arg("domain") = py::none(),
     py::arg("hy") = 0.0);

  m.def("run_config", [](const std::string& config, const std::string& out, std::uint64_t seed) {
    namespace fs = std::filesystem;
    const fs::path path(config);
    const experiment::RunResult r = experiment::run(experiment::load_config(path),
                                                    experiment::RunContext{path.parent_path(), out, seed, 1});
    experiment::write_report(r, out);
    py::list records;
    for (const auto& rec : r.records) records.append(to_python(rec));
    return py::make_tuple(records, r.violations);
  }, py::arg("config"), py::arg("out"), py::arg("seed") = 0);

  m.def("generate", [](const std::string& name, const std::map<std::string, std::string>& params,
                       const std::string& out) {
    std::vector<std::string> paths;
    for (const auto& f : experiment::generate(name, params, out)) paths.push_back(f.string());
    return paths;
  }, py::arg("name"), py::arg("params"), py::arg("out"));

  m.attr("__version__") = experiment::kToolVersion;
}

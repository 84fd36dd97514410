#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hslift/config.hpp"
#include "hslift/errors.hpp"
#include "hslift/experiments.hpp"
#include "hslift/hermite.hpp"
#include "hslift/sobolev.hpp"

namespace py = pybind11;
using namespace hslift;

namespace {

// pybind11 holders cannot be shared_ptr<const T>; the const view converts implicitly
using PyBasis = std::shared_ptr<Basis>;
PyBasis mutable_basis(const BasisPtr& b) { return std::const_pointer_cast<Basis>(b); }

// nlohmann -> python through the json module; reports are small
py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

TranslationMethod method_of(const std::string& name) {
  if (name == "exp") return TranslationMethod::exponential;
  if (name == "quadrature") return TranslationMethod::quadrature;
  throw ConfigError("method must be 'exp' or 'quadrature'");
}

}  // namespace

PYBIND11_MODULE(_hslift, m) {
  m.doc() = "Hermite-Sobolev lifting of finite-dimensional SDEs";
  m.attr("__version__") = version();

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TagMismatch>(m, "TagMismatch", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Basis, PyBasis>(m, "Basis")
      .def(py::init([](int dim, int max_degree) { return mutable_basis(Basis::make(dim, max_degree)); }), py::arg("dim"),
           py::arg("max_degree"))
      .def_property_readonly("dim", &Basis::dim)
      .def_property_readonly("max_degree", &Basis::max_degree)
      .def("__len__", &Basis::size)
      .def("index", [](const Basis& b, std::size_t r) { return b.index(r).entries(); })
      .def("rank", [](const Basis& b, std::vector<int> n) { return b.rank_of(MultiIndex(std::move(n))); })
      .def("__repr__", [](const Basis& b) {
        return "Basis(dim=" + std::to_string(b.dim()) + ", max_degree=" + std::to_string(b.max_degree()) + ")";
      });

  py::class_<SobolevVector>(m, "SobolevVector")
      .def(py::init([](const PyBasis& b, Eigen::VectorXd c, double tag) { return SobolevVector(b, std::move(c), tag); }),
           py::arg("basis"), py::arg("coeffs"), py::arg("tag") = 0.0)
      .def_property_readonly("basis", [](const SobolevVector& v) { return mutable_basis(v.basis_ptr()); })
      .def_property_readonly("coeffs", &SobolevVector::coeffs)
      .def_property_readonly("tag", &SobolevVector::tag)
      .def("norm", [](const SobolevVector& v, double p) { return sobolev_norm(v, p); }, py::arg("p"))
      .def("__len__", &SobolevVector::size)
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(double() * py::self)
      .def(py::self * double());

  m.def(
      "named_vector", [](const std::string& spec, const PyBasis& b, double tag) { return named_vector(spec, b, tag); }, py::arg("spec"), py::arg("basis"), py::arg("tag") = 0.0,
        "psi1, psi2, gaussian(v), h(n), delta(x) or monomial(k) on the basis");
  m.def(
      "expand",
      [](const std::function<double(std::vector<double>)>& f, const PyBasis& basis, double tag) {
        return expand_function([&](std::span<const double> x) { return f({x.begin(), x.end()}); }, basis, tag);
      },
      py::arg("f"), py::arg("basis"), py::arg("tag") = 0.0);
  m.def("reconstruct", [](const SobolevVector& v, std::vector<double> x) { return reconstruct(v, x); });
  m.def("hermite_functions", &hermite_functions, py::arg("max_n"), py::arg("x"));
  m.def("sobolev_norm", py::overload_cast<const SobolevVector&, double>(&sobolev_norm));
  m.def("pairing", &pairing);

  m.def("derivative_matrix", [](const PyBasis& b, int axis) { return derivative_matrix(b, axis).matrix; });
  m.def("multiplication_matrix", [](const PyBasis& b, int axis) { return multiplication_matrix(b, axis).matrix; });
  m.def(
      "translation_matrix",
      [](std::vector<double> x, const PyBasis& b, const std::string& method) {
        return translation_matrix(x, b, method_of(method)).matrix;
      },
      py::arg("x"), py::arg("basis"), py::arg("method") = "exp");
  m.def(
      "translate",
      [](const SobolevVector& v, std::vector<double> x, const std::string& method) {
        return translation_matrix(x, v.basis_ptr(), method_of(method)).apply(v);
      },
      py::arg("v"), py::arg("x"), py::arg("method") = "exp");
  m.def(
      "tau_poly_bound",
      [](double p, std::vector<double> radii, const PyBasis& b) {
        std::vector<std::vector<double>> pts;
        for (double r : radii) pts.push_back({r});
        const auto fit = tau_poly_bound(p, pts, b);
        py::dict d;
        d["coeffs"] = fit.envelope.coeffs;
        d["radii"] = fit.radii;
        d["values"] = fit.values;
        d["inflation"] = fit.inflation;
        d["max_violation"] = fit.max_violation;
        return d;
      },
      py::arg("p"), py::arg("radii"), py::arg("basis"));

  m.def(
      "b_bar",
      [](const std::string& example, const SobolevVector& psi, double p, std::vector<double> x) {
        const auto ex = make_example(example, psi.basis_ptr(), p);
        return b_bar(x, psi, ex.field);
      },
      py::arg("example"), py::arg("psi"), py::arg("p"), py::arg("x"));
  m.def(
      "sigma_bar",
      [](const std::string& example, const SobolevVector& psi, double p, std::vector<double> x) {
        const auto ex = make_example(example, psi.basis_ptr(), p);
        return sigma_bar(x, psi, ex.field);
      },
      py::arg("example"), py::arg("psi"), py::arg("p"), py::arg("x"));
  m.def(
      "set_c_check",
      [](const std::string& example, const SobolevVector& psi) {
        const auto ex = make_example(example, psi.basis_ptr(), 1.0);
        const auto v = set_c_check(psi, ex.set_c);
        py::dict d;
        d["member"] = v.member;
        d["labels"] = v.labels;
        d["residuals"] = v.residuals;
        d["max_residual"] = v.max_residual;
        return d;
      },
      py::arg("example"), py::arg("psi"));

  m.def("partial_sums", [](const SobolevVector& v, double p) { return to_python(to_json(partial_sums(v, p))); });
  m.def("quartic_density", &quartic_density);
  m.def("quartic_cdf", &quartic_cdf);
  m.def(
      "sample_quartic",
      [](std::size_t n, std::uint64_t seed) {
        RngStream rng(seed, 0);
        std::vector<double> out(n);
        for (auto& x : out) x = sample_quartic_stationary(rng);
        return out;
      },
      py::arg("n"), py::arg("seed") = 0);
  m.def("ks_two_sample", &ks_two_sample);

  m.def(
      "correspondence",
      [](const std::string& example, const std::string& xi, int N, double p, double T, double dt, int halvings,
         double z0, std::size_t paths, std::uint64_t seed) {
        CorrespondenceConfig c;
        c.example = example;
        c.xi = xi;
        c.N = N;
        c.p = p;
        c.T = T;
        c.dt = dt;
        c.halvings = halvings;
        c.z0 = z0;
        c.n_paths = paths;
        c.seed = seed;
        nlohmann::json out;
        {
          py::gil_scoped_release release;
          out = to_json(correspondence_ladder(c));
        }
        return to_python(out);
      },
      py::arg("example") = "ou", py::arg("xi") = "psi2", py::arg("N") = 40, py::arg("p") = 1.0, py::arg("T") = 0.5,
      py::arg("dt") = 1e-3, py::arg("halvings") = 3, py::arg("z0") = 0.3, py::arg("paths") = 24,
      py::arg("seed") = 0);
  m.def(
      "selftest",
      [](bool quick, std::uint64_t seed) {
        std::vector<Check> checks;
        {
          py::gil_scoped_release release;
          checks = selftest(quick, seed);
        }
        return to_python(to_json(checks));
      },
      py::arg("quick") = true, py::arg("seed") = 1);
}

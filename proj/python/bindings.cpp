#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dnni/cases.hpp"
#include "dnni/errors.hpp"
#include "dnni/galerkin.hpp"
#include "dnni/integral.hpp"
#include "dnni/quadrature.hpp"

namespace py = pybind11;
using namespace dnni;

namespace {

TrainConfig make_config(const std::vector<std::tuple<std::string, double, double>>& domains,
                        std::vector<std::size_t> points, std::vector<int> hidden, const std::string& activation,
                        long epochs, std::uint64_t seed, double lr) {
  TrainConfig cfg;
  for (const auto& [name, lo, hi] : domains) cfg.axes.push_back({name, {lo, hi}});
  if (points.empty()) points.assign(cfg.axes.size(), 100);
  cfg.points_per_axis = std::move(points);
  cfg.hidden = std::move(hidden);
  cfg.activation = parse_activation(activation);
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.lr0 = lr;
  return cfg;
}

py::dict quad_dict(const QuadResult& r) {
  py::dict d;
  d["value"] = r.value;
  d["evaluations"] = r.evaluations;
  d["converged"] = r.converged;
  d["error_estimate"] = r.error_estimate;
  d["seconds"] = r.elapsed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dnni, m) {
  py::register_exception<SyntaxError>(m, "SyntaxError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("evaluate", [](const std::string& src, const Bindings& vars) { return Expr::parse(src).eval(vars); },
        py::arg("expr"), py::arg("vars") = Bindings{});
  m.def("parse_tree", [](const std::string& src) { return Expr::parse(src).tree(); });

  py::class_<Evaluated>(m, "Evaluated")
      .def_readonly("value", &Evaluated::value)
      .def_readonly("out_of_domain", &Evaluated::out_of_domain)
      .def("__float__", [](const Evaluated& e) { return e.value; })
      .def("__repr__", [](const Evaluated& e) { return "Evaluated(" + std::to_string(e.value) + ")"; });

  py::class_<Antiderivative>(m, "Antiderivative")
      .def_static(
          "fit",
          [](const std::string& expr, const std::vector<std::tuple<std::string, double, double>>& domains,
             std::optional<double> anchor, std::vector<std::size_t> points, std::vector<int> hidden,
             const std::string& activation, long epochs, std::uint64_t seed, double lr) {
            const TrainConfig cfg = make_config(domains, std::move(points), std::move(hidden), activation, epochs,
                                                seed, lr);
            const double a = anchor.value_or(cfg.axes.at(0).domain.lo);
            py::gil_scoped_release release;
            return Antiderivative::fit(Expr::parse(expr), cfg, a);
          },
          py::arg("expr"), py::arg("domains"), py::arg("anchor") = py::none(),
          py::arg("points") = std::vector<std::size_t>{}, py::arg("hidden") = std::vector<int>{10, 10},
          py::arg("activation") = "tanh", py::arg("epochs") = 10000, py::arg("seed") = 42, py::arg("lr") = 1e-2)
      .def_static("load", &Antiderivative::load)
      .def_static("from_json", &Antiderivative::from_json)
      .def("save", &Antiderivative::save)
      .def("to_json", &Antiderivative::to_json)
      .def("value", &Antiderivative::value, py::arg("x"), py::arg("params") = Bindings{})
      .def("definite", &Antiderivative::definite, py::arg("lower"), py::arg("upper"), py::arg("params") = Bindings{})
      .def_property_readonly("variables", &Antiderivative::variables)
      .def_property_readonly("anchor", &Antiderivative::anchor)
      .def_property_readonly("integrand", &Antiderivative::integrand);

  m.def(
      "simpson13", [](const Integrand& f, double a, double b, long n) { return quad_dict(simpson13(f, a, b, n)); },
      py::arg("f"), py::arg("a"), py::arg("b"), py::arg("n"));
  m.def(
      "simpson38", [](const Integrand& f, double a, double b, long n) { return quad_dict(simpson38(f, a, b, n)); },
      py::arg("f"), py::arg("a"), py::arg("b"), py::arg("n"));
  m.def(
      "adaptive", [](const Integrand& f, double a, double b, double tol) { return quad_dict(adaptive(f, a, b, tol)); },
      py::arg("f"), py::arg("a"), py::arg("b"), py::arg("tol") = 1e-10);

  m.def(
      "galerkin",
      [](const std::string& source, double alpha, double beta, double gamma, double x0, double xn, double u0, double c,
         int nodes) {
        GalerkinProblem p;
        p.alpha = alpha;
        p.beta = beta;
        p.gamma = gamma;
        p.source = Expr::parse(source);
        p.x0 = x0;
        p.xn = xn;
        p.u0 = u0;
        p.c = c;
        p.n = nodes;
        const GalerkinSolution s = solve(p, LoadStrategy::quadrature);
        return std::make_pair(s.nodes, s.values);
      },
      py::arg("source"), py::arg("alpha") = 0.0, py::arg("beta") = 1.0, py::arg("gamma") = 0.0, py::arg("x0") = 0.0,
      py::arg("xn") = 1.0, py::arg("u0") = 0.0, py::arg("c") = 0.0, py::arg("nodes") = 101);

  m.def(
      "breakeven",
      [](double T, double t, double eps, int m) {
        const Breakeven b = breakeven({T, t, eps, m});
        return std::make_pair(b.n_real, b.n_int);
      },
      py::arg("T"), py::arg("t"), py::arg("eps"), py::arg("m") = 1);

  m.def("case_ids", [] {
    std::vector<int> ids;
    for (const CaseSpec& s : registry()) ids.push_back(s.id);
    return ids;
  });
  m.def(
      "case_truth", [](int id, double x) { return find_case(id).truth(x); }, py::arg("id"), py::arg("x"));
}

#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "plap/error.hpp"
#include "plap/experiment.hpp"
#include "plap/oracles.hpp"
#include "plap/schema.hpp"

namespace py = pybind11;

namespace {

plap::json parse(const std::string& text) { return plap::json::parse(text); }

}  // namespace

PYBIND11_MODULE(_plap, m) {
  m.doc() = "p-Laplacian torsion lab: solver, identity reports and oracles.";

  py::class_<plap::RadialProfile>(m, "RadialProfile")
      .def_property_readonly("n", &plap::RadialProfile::n)
      .def_property_readonly("p", &plap::RadialProfile::p)
      .def_property_readonly("R", &plap::RadialProfile::R)
      .def("u", &plap::RadialProfile::u)
      .def("du", &plap::RadialProfile::du)
      .def("d2u", &plap::RadialProfile::d2u)
      .def("ode_residual", &plap::RadialProfile::ode_residual)
      .def("boundary_slope", &plap::RadialProfile::boundary_slope);

  m.def("radial_exact", &plap::radial_exact, py::arg("n"), py::arg("p"), py::arg("R"));
  m.def("radial_fd_solve", &plap::radial_fd_solve, py::arg("n"), py::arg("p"), py::arg("R"),
        py::arg("cells"));
  m.def("p_ball_constant", &plap::p_ball_constant, py::arg("n"), py::arg("p"), py::arg("R"));

  m.def(
      "ellipse_boundary_integrals",
      [](double a, double b) {
        const auto e = plap::ellipse_boundary_integrals(a, b);
        py::dict d;
        d["area"] = e.area;
        d["perimeter"] = e.perimeter;
        d["inv_H_integral"] = e.inv_H_integral;
        d["H0"] = e.H0;
        d["max_H"] = e.max_H;
        d["min_H"] = e.min_H;
        return d;
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "matrix_inequality_gap",
      [](int n, double p, const Eigen::MatrixXd& H, const Eigen::VectorXd& g) {
        return plap::matrix_inequality_gap(n, p, H, g);
      },
      py::arg("n"), py::arg("p"), py::arg("H"), py::arg("g"));

  m.def(
      "config_errors",
      [](const std::string& config) {
        return plap::SchemaValidator(plap::config_schema()).errors(parse(config));
      },
      py::arg("config_json"), "Schema violations of a config document (JSON text).");
  m.def(
      "report_errors",
      [](const std::string& report) {
        return plap::SchemaValidator(plap::report_schema()).errors(parse(report));
      },
      py::arg("report_json"));

  m.def(
      "solve_case",
      [](const std::string& config, double p, double h, bool identities) {
        const plap::ExperimentConfig c = plap::parse_config(parse(config));
        plap::CaseResult result;
        {
          py::gil_scoped_release release;
          result = plap::run_case(c, p, h, identities);
        }
        return plap::case_to_json(c, result).dump();
      },
      py::arg("config_json"), py::arg("p"), py::arg("h"), py::arg("identities") = true,
      "Run one grid point and return its report entry as JSON text.");

  m.def(
      "run",
      [](const std::string& command, const std::string& config, std::optional<std::string> out,
         std::optional<std::uint64_t> seed) {
        plap::RunOverrides overrides{out, seed};
        std::ostringstream log;
        int code;
        {
          py::gil_scoped_release release;
          code = plap::run_document(plap::parse_command(command), parse(config), overrides, log);
        }
        return py::make_tuple(code, log.str());
      },
      py::arg("command"), py::arg("config_json"), py::arg("out") = py::none(),
      py::arg("seed") = py::none(), "Execute a command; returns (exit_code, log).");

  py::register_exception<plap::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<plap::PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<plap::ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
}

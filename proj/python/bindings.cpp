#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cnslab/error.hpp"
#include "cnslab/field_io.hpp"
#include "cnslab/harness.hpp"
#include "cnslab/ineq.hpp"
#include "cnslab/spectral.hpp"
#include "cnslab/thermo.hpp"

namespace py = pybind11;
using namespace cns;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Arrays are indexed [j, i]: rows follow y, columns follow x.
Array to_array(const ScalarField& f) {
  const auto n = static_cast<py::ssize_t>(f.grid().n());
  Array a({n, n});
  std::copy(f.values().begin(), f.values().end(), a.mutable_data());
  return a;
}

ScalarField to_field(const Array& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidArgument("expected a square 2-d array");
  auto grid = TorusGrid::create(static_cast<std::size_t>(a.shape(0)));
  return ScalarField(grid, std::vector<double>(a.data(), a.data() + a.size()));
}

ScalarField to_field(const Array& a, const GridPtr& grid) {
  ScalarField f = to_field(a);
  return ScalarField(grid, std::vector<double>(f.values().begin(), f.values().end()));
}

ShapeSpec shape(const std::string& name, const std::map<std::string, double>& params) { return {name, params}; }

py::dict records_dict(const std::vector<DiagnosticsRecord>& rs) {
  py::dict d;
  auto column = [&](const char* key, double DiagnosticsRecord::*m) {
    std::vector<double> v;
    v.reserve(rs.size());
    for (const auto& r : rs) v.push_back(r.*m);
    d[key] = py::array(py::cast(v));
  };
  column("t", &DiagnosticsRecord::t);
  column("mass", &DiagnosticsRecord::mass);
  column("mom_x", &DiagnosticsRecord::mom_x);
  column("mom_y", &DiagnosticsRecord::mom_y);
  column("E", &DiagnosticsRecord::energy);
  column("calE", &DiagnosticsRecord::cal_e);
  column("intD", &DiagnosticsRecord::int_d);
  column("sup_rho", &DiagnosticsRecord::sup_rho);
  column("rho_bound_margin", &DiagnosticsRecord::rho_bound_margin);
  column("sup_Fplus", &DiagnosticsRecord::sup_fplus);
  column("div_L2", &DiagnosticsRecord::div_l2);
  column("div_Linf", &DiagnosticsRecord::div_linf);
  column("gradPv_L2", &DiagnosticsRecord::grad_pv_l2);
  column("gradPv_Linf", &DiagnosticsRecord::grad_pv_linf);
  column("Gt_L2", &DiagnosticsRecord::gt_l2);
  column("Pt_L2", &DiagnosticsRecord::pt_l2);
  column("rho_vdot_L2", &DiagnosticsRecord::rho_vdot_l2);
  column("wt_rho_vdot_L2", &DiagnosticsRecord::wt_rho_vdot_l2);
  column("wt_grad_vdot", &DiagnosticsRecord::wt_grad_vdot);
  column("wt_grad_vdot_acc", &DiagnosticsRecord::wt_grad_vdot_acc);
  column("energy_residual", &DiagnosticsRecord::energy_residual);
  column("elliptic_gap", &DiagnosticsRecord::elliptic_gap);
  column("equiv_E_margin", &DiagnosticsRecord::equiv_e_margin);
  return d;
}

py::object json_to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compressible Navier-Stokes laboratory on the periodic square";
  m.attr("__version__") = kVersion;

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error");
  py::register_exception<AssertionFailure>(m, "AssertionFailure");
  py::register_exception<NumericalFailure>(m, "NumericalFailure");
  py::register_exception<NonFiniteValue>(m, "NonFiniteValue");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def("grid_coordinates", [](std::size_t n) {
    auto g = TorusGrid::create(n);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = g->x(i);
    return x;
  });

  m.def("make_density", [](std::size_t n, const std::string& name, const std::map<std::string, double>& params) {
    return to_array(make_density(TorusGrid::create(n), shape(name, params)));
  }, py::arg("n"), py::arg("name"), py::arg("params") = std::map<std::string, double>{});
  m.def("make_velocity", [](std::size_t n, const std::string& name, const std::map<std::string, double>& params) {
    const auto v = make_velocity(TorusGrid::create(n), shape(name, params));
    return py::make_tuple(to_array(v.x), to_array(v.y));
  }, py::arg("n"), py::arg("name"), py::arg("params") = std::map<std::string, double>{});

  m.def("divergence", [](const Array& vx, const Array& vy) {
    const auto x = to_field(vx);
    return to_array(divergence(VectorField(x, to_field(vy, x.grid_ptr()))));
  });
  m.def("leray_project", [](const Array& vx, const Array& vy) {
    const auto x = to_field(vx);
    const auto p = leray_project(VectorField(x, to_field(vy, x.grid_ptr())));
    return py::make_tuple(to_array(p.solenoidal.x), to_array(p.solenoidal.y), to_array(p.gradient.x),
                          to_array(p.gradient.y));
  });

  m.def("pressure", [](double rho, double a, double gamma) { return PressureLaw(a, gamma).pressure(rho); });
  m.def("potential_energy", [](double rho, double a, double gamma) { return PressureLaw(a, gamma).potential_energy(rho); });

  m.def("read_cnsf", [](const std::filesystem::path& p) { return to_array(read_cnsf(p)); });
  m.def("write_cnsf", [](const std::filesystem::path& p, const Array& a) { write_cnsf(p, to_field(a)); });
  m.def("csv_columns", &csv_columns);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("load", &RunConfig::load)
      .def_static("parse", [](const std::string& text) {
        std::istringstream in(text);
        return RunConfig::parse(in);
      })
      .def("canonical", &RunConfig::canonical)
      .def("hash", &RunConfig::hash)
      .def("to_dict", [](const RunConfig& c) { return json_to_py(c.to_json()); })
      .def_readwrite("n", &RunConfig::n)
      .def_readwrite("mu", &RunConfig::mu)
      .def_readwrite("lambda_", &RunConfig::lambda)
      .def_readwrite("t_end", &RunConfig::t_end)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("out", &RunConfig::out)
      .def_property("nu", &RunConfig::nu, &RunConfig::set_nu);

  m.def("run", [](const RunConfig& c, bool write_outputs) {
    RunOptions o;
    o.write_outputs = write_outputs;
    RunOutput out = [&] {
      py::gil_scoped_release release;
      return run(c, o);
    }();
    py::dict d;
    d["t"] = out.final_state.t;
    d["rho"] = to_array(out.final_state.rho);
    d["vx"] = to_array(out.final_state.v.x);
    d["vy"] = to_array(out.final_state.v.y);
    d["records"] = records_dict(out.records);
    d["e0"] = out.e0;
    d["rho0_star"] = out.rho0_star;
    d["mass_drift"] = out.mass_drift;
    d["momentum_drift"] = out.momentum_drift;
    d["steps"] = out.steps;
    d["conditions"] = json_to_py(to_json(out.conditions));
    return d;
  }, py::arg("config"), py::arg("write_outputs") = false);

  m.def("check_conditions", [](const RunConfig& c) { return json_to_py(check_conditions(c).to_json()); });

  m.def("poincare_weighted", [](const Array& rho, const Array& b, double p, double c) {
    const auto r = to_field(rho);
    const auto rep = poincare_weighted(r, remove_weighted_mean(r, to_field(b, r.grid_ptr())), p, c);
    return py::make_tuple(rep.lhs, rep.rhs_without_constant, rep.implied_constant);
  }, py::arg("rho"), py::arg("b"), py::arg("p") = 2.0, py::arg("c") = 1.0);

  m.def("verify_inequalities", [](std::size_t n, std::uint64_t samples, std::uint64_t seed,
                                   const std::string& calibration) {
    const auto cal = Calibration::load(calibration);
    nlohmann::json j;
    {
      py::gil_scoped_release release;
      j = run_inequality_suite(TorusGrid::create(n), cal, samples, seed).to_json();
    }
    return json_to_py(j);
  });
}

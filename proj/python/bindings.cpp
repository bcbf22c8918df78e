#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "nbwk/action.hpp"
#include "nbwk/cli.hpp"
#include "nbwk/dynamics.hpp"
#include "nbwk/errors.hpp"
#include "nbwk/minimize.hpp"
#include "nbwk/weak_kam.hpp"

namespace py = pybind11;
using namespace nbwk;

namespace {

using Positions = std::vector<std::vector<double>>;

Configuration config(const MassSystem& sys, const Positions& p) {
  const Configuration x = Configuration::from_positions(p);
  sys.check(x);
  return x;
}

MinimizeOptions options(std::size_t nodes, double tol) {
  MinimizeOptions o;
  o.nodes = nodes;
  o.tol = tol;
  return o;
}

py::dict curve_dict(const Curve& c) {
  py::dict d;
  std::vector<double> times;
  std::vector<Positions> nodes;
  for (std::size_t j = 0; j <= c.segments(); ++j) {
    times.push_back(c.time(j));
    nodes.push_back(c.node(j).positions());
  }
  d["times"] = times;
  d["positions"] = nodes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Free-time action potentials and weak KAM diagnostics for the N-body problem";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ArithmeticError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<OutOfReach>(m, "OutOfReach", PyExc_ValueError);

  py::class_<MassSystem>(m, "MassSystem")
      .def(py::init<std::vector<double>, std::size_t, double>(), py::arg("masses"), py::arg("dim"),
           py::arg("alpha") = -1.0)
      .def_property_readonly("masses", [](const MassSystem& s) {
        return std::vector<double>(s.masses().begin(), s.masses().end());
      })
      .def_property_readonly("dim", &MassSystem::dim)
      .def_property_readonly("alpha", &MassSystem::alpha)
      .def_property_readonly("total_mass", &MassSystem::total_mass)
      .def("__repr__", &MassSystem::fingerprint);

  m.def("potential", [](const MassSystem& s, const Positions& x) { return potential(config(s, x), s); },
        py::arg("system"), py::arg("positions"));
  m.def("center_of_mass", [](const MassSystem& s, const Positions& x) { return center_of_mass(config(s, x), s); },
        py::arg("system"), py::arg("positions"));
  m.def("kepler_exponent", &kepler_exponent, py::arg("alpha") = -1.0);
  m.def("kepler_solution_constant", &kepler_solution_constant, py::arg("m1"), py::arg("m2"),
        py::arg("alpha") = -1.0);

  m.def(
      "action",
      [](const MassSystem& s, const std::vector<Positions>& nodes, double dt, const std::string& quad) {
        std::vector<Configuration> cs;
        for (const auto& p : nodes) cs.push_back(config(s, p));
        const ActionBreakdown a =
            action(Curve(0.0, dt, cs), s, quad == "trapezoid" ? Quadrature::trapezoid : Quadrature::midpoint);
        return py::dict(py::arg("kinetic") = a.kinetic, py::arg("potential") = a.potential,
                        py::arg("total") = a.total);
      },
      py::arg("system"), py::arg("nodes"), py::arg("dt"), py::arg("quadrature") = "midpoint");

  m.def(
      "fixed_time",
      [](const MassSystem& s, const Positions& x, const Positions& y, double T, std::size_t nodes, double tol) {
        const MinimizeResult r = minimize_fixed_time(config(s, x), config(s, y), T, s, options(nodes, tol));
        py::dict d = curve_dict(r.curve);
        d["value"] = r.value;
        d["converged"] = r.converged;
        d["iterations"] = r.iterations;
        return d;
      },
      py::arg("system"), py::arg("x"), py::arg("y"), py::arg("duration"), py::arg("nodes") = 64,
      py::arg("tol") = 1e-6);

  m.def(
      "phi",
      [](const MassSystem& s, const Positions& x, const Positions& y, std::size_t nodes, double tol) {
        const PotentialValue pv = free_time_potential(config(s, x), config(s, y), s, options(nodes, tol));
        py::dict d = curve_dict(pv.curve);
        d["value"] = pv.value;
        d["t_star"] = pv.t_star;
        d["converged"] = pv.converged;
        d["at_edge"] = pv.at_edge;
        d["message"] = pv.message;
        return d;
      },
      py::arg("system"), py::arg("x"), py::arg("y"), py::arg("nodes") = 64, py::arg("tol") = 1e-6);

  m.def(
      "kepler_residual",
      [](const MassSystem& s, const Positions& x) { return field_hj_residual(KeplerField(s), config(s, x), s); },
      py::arg("system"), py::arg("positions"));

  m.def(
      "fixed_point",
      [](const std::vector<double>& masses, double r_min, double r_max, std::size_t n_radii, std::size_t angles,
         const std::vector<Vec>& shifts, double t, std::size_t nodes, double tol) {
        PolarGrid g = PolarGrid::geometric(masses, r_min, r_max, n_radii, angles);
        g.shifts = shifts;
        const FixedTimeKernel k = fixed_time_kernel(g, t, options(nodes, 1e-6));
        const SampledField zero =
            SampledField::sample(KeplerField(g.system()), g).with_values(std::vector<double>(g.size(), 0.0));
        FixedPointOptions fp;
        fp.tol = tol;
        const FixedPointResult r = fixed_point_iterate(zero, k, fp);
        std::vector<Positions> pts;
        for (const auto& p : g.points()) pts.push_back(p.positions());
        return py::dict(py::arg("values") = r.field.values(), py::arg("points") = pts,
                        py::arg("converged") = r.converged, py::arg("sweeps") = r.history.size());
      },
      py::arg("masses"), py::arg("r_min"), py::arg("r_max"), py::arg("n_radii"), py::arg("angles"),
      py::arg("shifts") = std::vector<Vec>{Vec{0.0, 0.0}}, py::arg("t") = 1.0, py::arg("nodes") = 64,
      py::arg("tol") = 1e-9);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv{"nbody-wkam"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::vector<char*> ptrs;
        for (auto& a : argv) ptrs.push_back(a.data());
        py::gil_scoped_release release;
        return cli::main(static_cast<int>(ptrs.size()), ptrs.data());
      },
      py::arg("args"), "Runs the command line tool in-process and returns its exit code.");
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "mzgrid/config.hpp"
#include "mzgrid/demarco.hpp"
#include "mzgrid/errors.hpp"
#include "mzgrid/heat_bath.hpp"
#include "mzgrid/hermite.hpp"
#include "mzgrid/io.hpp"
#include "mzgrid/pipeline.hpp"
#include "mzgrid/quadrature.hpp"

namespace py = pybind11;
using namespace mzgrid;

namespace {

py::array_t<double> values_of(const Trajectory& t) {
  py::array_t<double> out({t.size(), t.width()});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t c = 0; c < t.width(); ++c) m(i, c) = t.value(i, c);
  return out;
}

py::array_t<double> vec(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

StateVector state_from(const std::vector<double>& u) {
  if (u.size() != 5) throw UsageError("3-bus state needs 5 values (omega1, omega2, alpha2, alpha3, v3)");
  return {u[0], u[1], u[2], u[3], u[4]};
}

MemorySpec memory_from(py::object m) {
  if (m.is_none()) return MemorySpec::infinite();
  if (py::isinstance<py::str>(m)) return parse_memory_spec(m.cast<std::string>());
  return MemorySpec::finite(m.cast<double>());
}

}  // namespace

PYBIND11_MODULE(mzgrid, m) {
  m.doc() = "Mori-Zwanzig reduced models for a 3-bus grid and a harmonic heat bath";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<IntegrationError>(m, "IntegrationError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<PipelineError>(m, "PipelineError", PyExc_RuntimeError);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("dt", &Trajectory::dt)
      .def_property_readonly("labels", &Trajectory::labels)
      .def_property_readonly("times", [](const Trajectory& t) { return vec(t.times()); })
      .def_property_readonly("values", &values_of)
      .def("column", [](const Trajectory& t, const std::string& name) { return vec(t.column(name)); })
      .def("__len__", &Trajectory::size);

  py::class_<GridParams>(m, "GridParams")
      .def(py::init<>())
      .def_readwrite("m1", &GridParams::m1)
      .def_readwrite("m2", &GridParams::m2)
      .def_readwrite("d1", &GridParams::d1)
      .def_readwrite("d2", &GridParams::d2)
      .def_readwrite("d3", &GridParams::d3)
      .def_readwrite("b1", &GridParams::b1)
      .def_readwrite("b2", &GridParams::b2)
      .def_readwrite("b3", &GridParams::b3)
      .def_readwrite("p2", &GridParams::p2)
      .def_readwrite("p3", &GridParams::p3)
      .def_readwrite("q3", &GridParams::q3)
      .def_readwrite("epsilon", &GridParams::epsilon)
      .def_readwrite("v1", &GridParams::v1)
      .def_readwrite("v2", &GridParams::v2);

  m.def("default_initial_state", [] {
    const StateVector u = default_initial_state();
    return std::vector<double>(u.x.data(), u.x.data() + 5);
  });
  m.def(
      "energy", [](const std::vector<double>& u, const GridParams& p) { return energy(state_from(u), p); },
      py::arg("u"), py::arg("params") = GridParams{});
  m.def(
      "rhs",
      [](const std::vector<double>& u, const GridParams& p) {
        const Vector5 r = rhs(state_from(u), p);
        return std::vector<double>(r.data(), r.data() + 5);
      },
      py::arg("u"), py::arg("params") = GridParams{});
  m.def(
      "simulate_full",
      [](const std::vector<double>& u0, double dt, double t_end, std::size_t stride, const GridParams& p) {
        return simulate_full(state_from(u0), p, dt, t_end, stride);
      },
      py::arg("u0"), py::arg("dt") = 5e-5, py::arg("t_end") = 2.0, py::arg("stride") = 1,
      py::arg("params") = GridParams{});

  m.def("basis_size", [](int dim, int order) { return enumerate_multi_indices(dim, order).size(); });
  m.def(
      "sparse_grid_size",
      [](int order, int level) {
        const HermiteBasis basis(order, {0.0, 0.0, -0.16}, {0.01, 0.01, 0.01});
        return build_quadrature(basis, level).size();
      },
      py::arg("order") = 1, py::arg("level") = 7);

  m.def("heat_bath_kernel", [](double t) { return memory_kernel_K(t, BathParams::defaults()); });
  m.def("heat_bath_noise", [](double t) {
    return noise_F_p(t, bath_initial_state(), BathParams::defaults());
  });
  m.def(
      "simulate_heat_bath",
      [](double dt, double t_end, std::size_t n_osc) {
        return simulate_full_bath(bath_initial_state(n_osc), BathParams::defaults(n_osc), dt, t_end);
      },
      py::arg("dt") = 1e-3, py::arg("t_end") = 10.0, py::arg("n_osc") = 5);
  m.def(
      "simulate_reduced_particle",
      [](double dt, double t_end, py::object memory, std::size_t n_osc) {
        const MemorySpec spec = memory_from(memory);
        ReducedParticleOptions opts;
        if (spec.mode == MemoryMode::kNone) opts.t_memory = 0.0;
        else if (spec.mode == MemoryMode::kFinite) opts.t_memory = spec.t_memory;
        return simulate_reduced_particle(bath_initial_state(n_osc), BathParams::defaults(n_osc), dt, t_end, opts);
      },
      py::arg("dt") = 1e-3, py::arg("t_end") = 10.0, py::arg("memory") = py::none(), py::arg("n_osc") = 5);

  m.def("config_hash", [](const std::string& path) { return hash_hex(parse_config(path).config_hash); });
  m.def("canonical_config", [](const std::string& path) { return parse_config(path).canonical_json; });
  m.def(
      "run_pipeline", [](const std::string& path) { return run_pipeline(parse_config(path)).to_json(); },
      py::call_guard<py::gil_scoped_release>());
  m.def("read_trajectory_csv", &read_trajectory_csv);
}

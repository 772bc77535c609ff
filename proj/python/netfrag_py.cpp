#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <sstream>

#include "netfrag/error.hpp"
#include "netfrag/indicator.hpp"
#include "netfrag/io.hpp"
#include "netfrag/mfd.hpp"
#include "netfrag/recovery.hpp"
#include "netfrag/stochastic.hpp"

namespace py = pybind11;
using namespace netfrag;

namespace {

Horizon to_horizon(double t) {
  return std::isinf(t) ? Horizon::unbounded() : Horizon::seconds(t);
}

SignalDelay delay_from(const std::string& name) {
  if (name == "mean-stop") return SignalDelay::kMeanStop;
  if (name == "full-red") return SignalDelay::kFullRed;
  if (name == "random-arrival") return SignalDelay::kRandomArrival;
  throw ParameterError("unknown delay model '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_netfrag, m) {
  m.doc() = "Network fragility from macroscopic fundamental diagrams";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ConstructionError>(m, "ConstructionError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<UnreachableStateError>(m, "UnreachableStateError", base.ptr());
  py::register_exception<AssumptionError>(m, "AssumptionError", base.ptr());
  py::register_exception<DegenerateError>(m, "DegenerateError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());
  py::register_exception<OutOfRegionError>(m, "OutOfRegionError", base.ptr());
  py::register_exception<GridlockError>(m, "GridlockError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<NetworkParams>(m, "NetworkParams")
      .def(py::init<>())
      .def_static("zurich", &NetworkParams::zurich)
      .def_static("load", [](const std::string& path) { return load_params(path); })
      .def_readwrite("free_flow_speed", &NetworkParams::free_flow_speed)
      .def_readwrite("backward_wave_speed", &NetworkParams::backward_wave_speed)
      .def_readwrite("max_density", &NetworkParams::max_density)
      .def_readwrite("lane_capacity", &NetworkParams::lane_capacity)
      .def_readwrite("total_lane_length", &NetworkParams::total_lane_length)
      .def_readwrite("avg_lane_length", &NetworkParams::avg_lane_length)
      .def_readwrite("avg_trip_length", &NetworkParams::avg_trip_length)
      .def_readwrite("cycle_time", &NetworkParams::cycle_time)
      .def_readwrite("green_time", &NetworkParams::green_time)
      .def_readwrite("green_time_std", &NetworkParams::green_time_std)
      .def_readwrite("offset", &NetworkParams::offset)
      .def("validate", &NetworkParams::validate);

  py::class_<Cut>(m, "Cut")
      .def(py::init<double, double>(), py::arg("slope"), py::arg("intercept"))
      .def_readwrite("slope", &Cut::slope)
      .def_readwrite("intercept", &Cut::intercept)
      .def("at", &Cut::at)
      .def("__repr__", [](const Cut& c) {
        std::ostringstream s;
        s << "Cut(slope=" << c.slope << ", intercept=" << c.intercept << ")";
        return s.str();
      });

  py::class_<PiecewiseLinearMfd>(m, "Mfd")
      .def(py::init<std::vector<Cut>, double>(), py::arg("cuts"), py::arg("n_max"))
      .def_property_readonly("cuts", [](const PiecewiseLinearMfd& f) {
        return std::vector<Cut>(f.cuts().begin(), f.cuts().end());
      })
      .def_property_readonly("breakpoints", [](const PiecewiseLinearMfd& f) {
        return std::vector<double>(f.breakpoints().begin(), f.breakpoints().end());
      })
      .def_property_readonly("n_max", &PiecewiseLinearMfd::n_max)
      .def_property_readonly("m_max", &PiecewiseLinearMfd::m_max)
      .def_property_readonly("critical_accumulation", &PiecewiseLinearMfd::critical_accumulation)
      .def("__call__", [](const PiecewiseLinearMfd& f, double n) { return f.evaluate(n).completion; })
      .def("active_cut", [](const PiecewiseLinearMfd& f, double n) {
        return f.evaluate(n).cut;
      });

  m.def("build_moc_mfd",
        [](const NetworkParams& p, std::optional<double> green, const std::string& delay) {
          return build_moc_mfd(p, green.value_or(p.green_time), MocOptions{delay_from(delay)});
        },
        py::arg("params"), py::arg("green_time") = py::none(), py::arg("delay") = "mean-stop");
  m.def("build_unit_mfd", &build_unit_mfd, py::arg("a_f"), py::arg("a_w_abs"), py::arg("m_max"));
  m.def("scale_supply", &scale_supply, py::arg("mfd"), py::arg("r"));
  m.def("scale_to_unit", [](const PiecewiseLinearMfd& f) {
    UnitScaling s = scale_to_unit(f);
    return py::make_tuple(s.mfd, s.gamma);
  });

  py::class_<Segment>(m, "Segment")
      .def_readonly("cut", &Segment::cut)
      .def_readonly("n_entry", &Segment::n_entry)
      .def_readonly("n_exit", &Segment::n_exit)
      .def_readonly("t_entry", &Segment::t_entry)
      .def_readonly("duration", &Segment::duration)
      .def_readonly("tts", &Segment::tts)
      .def_readonly("excess_tts", &Segment::excess_tts);

  py::class_<RecoveryResult>(m, "RecoveryResult")
      .def_readonly("n_start", &RecoveryResult::n_start)
      .def_readonly("equilibrium", &RecoveryResult::equilibrium)
      .def_readonly("segments", &RecoveryResult::segments)
      .def_readonly("tts", &RecoveryResult::tts)
      .def_readonly("excess_tts", &RecoveryResult::excess_tts)
      .def_readonly("n_end", &RecoveryResult::n_end)
      .def("state_at", &RecoveryResult::state_at);

  m.def("equilibrium_accumulation", &equilibrium_accumulation, py::arg("mfd"),
        py::arg("base_demand"));
  m.def("recover",
        [](const PiecewiseLinearMfd& f, double n, double m0, double t) {
          return recover(f, n, m0, to_horizon(t));
        },
        py::arg("mfd"), py::arg("n_start"), py::arg("base_demand"),
        py::arg("horizon") = INFINITY);
  m.def("total_tts_demand",
        [](double n_prime, double t, const PiecewiseLinearMfd& f, double m0) {
          return total_tts_demand(n_prime, to_horizon(t), f, m0);
        },
        py::arg("n_prime"), py::arg("horizon"), py::arg("mfd"), py::arg("base_demand"));
  m.def("total_tts_supply",
        [](double r, double t, const PiecewiseLinearMfd& f, double m0) {
          return total_tts_supply(r, to_horizon(t), f, m0);
        },
        py::arg("r"), py::arg("horizon"), py::arg("mfd"), py::arg("base_demand"));
  m.def("supply_equilibrium", &supply_equilibrium, py::arg("r"), py::arg("n0"), py::arg("mfd"));
  m.def("second_derivative_demand",
        [](double n_prime, const PiecewiseLinearMfd& f, double m0, double t) {
          return second_derivative_demand(n_prime, f, m0, t).value;
        },
        py::arg("n_prime"), py::arg("mfd"), py::arg("base_demand"), py::arg("t"));

  m.def("skewness", [](const std::vector<double>& x) { return skewness(x); });
  m.def("sample_tts", [](const PiecewiseLinearMfd& f) { return sample_tts(f); });
  m.def("unit_skewness",
        [](double af, double aw, double mm) { return unit_skewness(af, aw, mm); },
        py::arg("a_f"), py::arg("a_w_abs"), py::arg("m_max"));

  py::class_<Betas>(m, "Betas")
      .def(py::init<>())
      .def_readwrite("b1", &Betas::b1)
      .def_readwrite("b2", &Betas::b2)
      .def_readwrite("b3", &Betas::b3)
      .def_readwrite("b4", &Betas::b4)
      .def_readwrite("b5", &Betas::b5);
  m.def("approx_curve",
        [](double af, double mm, double s, const Betas& b, const std::string& f) {
          return approx_curve(af, mm, s, b, Activation::parse(f));
        },
        py::arg("a_f"), py::arg("m_max"), py::arg("s"), py::arg("betas"),
        py::arg("activation") = "kappa5");
  m.def("solve_skewness",
        [](double af, double aw, double mm, const Betas& b, const std::string& f) {
          return solve_skewness(af, aw, mm, b, Activation::parse(f));
        },
        py::arg("a_f"), py::arg("a_w_abs"), py::arg("m_max"), py::arg("betas"),
        py::arg("activation") = "kappa5");
  m.def("activation", [](const std::string& name, double x) { return Activation::parse(name)(x); });

  m.def("stochastic_skewness",
        [](const std::string& kind, std::size_t samples, std::uint64_t seed, double dt) {
          StochasticConfig c;
          c.sample_count = samples;
          c.seed = seed;
          c.dt = dt;
          ExperimentKind k = kind == "demand" ? ExperimentKind::kDemand
                             : kind == "supply"
                                 ? ExperimentKind::kSupply
                                 : throw ParameterError("kind must be demand or supply");
          const ExperimentResult r = run_experiment(k, c);
          return py::make_tuple(r.s_det, r.s_stoch);
        },
        py::arg("kind"), py::arg("samples") = 1000, py::arg("seed") = 42, py::arg("dt") = 1.0);

  m.attr("__version__") = tool_version();
}

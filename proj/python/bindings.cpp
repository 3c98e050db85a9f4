#include <complex>
#include <string>
#include <vector>

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ofdmest/estimator.hpp"
#include "ofdmest/eval.hpp"
#include "ofdmest/experiments.hpp"
#include "ofdmest/geosim.hpp"
#include "ofdmest/model.hpp"
#include "ofdmest/scenario.hpp"
#include "ofdmest/trigroots.hpp"

namespace py = pybind11;
using namespace ofdmest;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

CArray to_numpy(const ReceivedTensor& y) {
  CArray out({y.n_subcarriers(), y.n_symbols(), y.n_rx()});
  std::copy(y.data().begin(), y.data().end(), out.mutable_data());
  return out;
}

CArray to_numpy(const PilotTensor& x) {
  CArray out({x.n_subcarriers(), x.n_symbols(), x.n_tx()});
  std::copy(x.data().begin(), x.data().end(), out.mutable_data());
  return out;
}

ReceivedTensor received_from(const CArray& a) {
  if (a.ndim() != 3) throw std::invalid_argument("y: expected shape (n_subcarriers, n_symbols, n_rx)");
  ReceivedTensor y(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                   static_cast<std::size_t>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), y.data().begin());
  return y;
}

PilotTensor pilots_from(const CArray& a) {
  if (a.ndim() != 3) throw std::invalid_argument("pilots: expected shape (n_subcarriers, n_symbols, n_tx)");
  const auto nc = static_cast<std::size_t>(a.shape(0));
  const auto ns = static_cast<std::size_t>(a.shape(1));
  const auto nt = static_cast<std::size_t>(a.shape(2));
  PilotTensor x(nc, ns, nt);
  const cplx* p = a.data();
  for (std::size_t n = 0; n < nc; ++n)
    for (std::size_t t = 0; t < ns; ++t)
      for (std::size_t v = 0; v < nt; ++v) x(n, t, v) = *p++;
  return x;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sequential ML/MAP multipath parameter estimation for uplink OFDM";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("n_subcarriers", &SystemConfig::n_subcarriers)
      .def_readwrite("n_symbols", &SystemConfig::n_symbols)
      .def_readwrite("n_rx", &SystemConfig::n_rx)
      .def_readwrite("n_tx", &SystemConfig::n_tx)
      .def_readwrite("subcarrier_spacing", &SystemConfig::subcarrier_spacing)
      .def_readwrite("symbol_time", &SystemConfig::symbol_time)
      .def_readwrite("carrier_freq", &SystemConfig::carrier_freq)
      .def_readwrite("noise_var", &SystemConfig::noise_var)
      .def_readwrite("tx_power", &SystemConfig::tx_power)
      .def("validate", &SystemConfig::validate);

  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init<>())
      .def_readwrite("max_paths", &OptimizerConfig::max_paths)
      .def_readwrite("max_iterations", &OptimizerConfig::max_iterations)
      .def_readwrite("eps_var", &OptimizerConfig::eps_var)
      .def_readwrite("eps_obj", &OptimizerConfig::eps_obj)
      .def_readwrite("eps_paths", &OptimizerConfig::eps_paths)
      .def_readwrite("momentum_init", &OptimizerConfig::momentum_init)
      .def_readwrite("momentum_decay", &OptimizerConfig::momentum_decay)
      .def_readwrite("sor_base", &OptimizerConfig::sor_base)
      .def_readwrite("sor_amp", &OptimizerConfig::sor_amp)
      .def_readwrite("sor_tau", &OptimizerConfig::sor_tau)
      .def_static("exact", &OptimizerConfig::exact)
      .def("validate", &OptimizerConfig::validate);

  py::class_<PathParams>(m, "PathParams")
      .def(py::init<>())
      .def(py::init([](cplx b, double omega1, double omega2, double phi, double theta) {
             return PathParams{b, omega1, omega2, phi, theta};
           }),
           py::arg("b"), py::arg("omega1"), py::arg("omega2"), py::arg("phi"), py::arg("theta"))
      .def_readwrite("b", &PathParams::b)
      .def_readwrite("omega1", &PathParams::omega1)
      .def_readwrite("omega2", &PathParams::omega2)
      .def_readwrite("phi", &PathParams::phi)
      .def_readwrite("theta", &PathParams::theta)
      .def("active", &PathParams::active)
      .def("__repr__", [](const PathParams& p) {
        return "PathParams(b=" + std::to_string(p.b.real()) + "+" + std::to_string(p.b.imag()) +
               "j, omega1=" + std::to_string(p.omega1) + ", omega2=" + std::to_string(p.omega2) +
               ", phi=" + std::to_string(p.phi) + ", theta=" + std::to_string(p.theta) + ")";
      });

  py::class_<TrigSeries>(m, "TrigSeries")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("a"), py::arg("b"))
      .def_readonly("a", &TrigSeries::a)
      .def_readonly("b", &TrigSeries::b)
      .def("magnitude", &TrigSeries::magnitude);

  m.def("evaluate", &evaluate, py::arg("series"), py::arg("x"));
  m.def(
      "roots",
      [](const TrigSeries& s, const std::string& method) {
        RootOptions opts;
        if (method == "laurent") {
          opts.method = RootMethod::laurent_companion;
        } else if (method != "chebyshev") {
          throw std::invalid_argument("method: expected 'chebyshev' or 'laurent'");
        }
        return roots(s, opts);
      },
      py::arg("series"), py::arg("method") = "chebyshev");

  m.def("steering", &steering, py::arg("angle"), py::arg("n_antennas"));
  m.def(
      "sweep_precoder_pilots", [](const SystemConfig& cfg) { return to_numpy(sweep_precoder_pilots(cfg)); },
      py::arg("cfg"));
  m.def(
      "model_mean",
      [](const ParamVector& params, const CArray& pilots, std::size_t n_rx) {
        return to_numpy(model_mean(params, pilots_from(pilots), n_rx));
      },
      py::arg("params"), py::arg("pilots"), py::arg("n_rx"));
  m.def(
      "synthesize_received",
      [](const ParamVector& params, const CArray& pilots, const SystemConfig& cfg, std::uint64_t seed,
         bool noise) {
        return to_numpy(synthesize_received(params, pilots_from(pilots), cfg, seed,
                                            noise ? NoiseMode::enabled : NoiseMode::disabled));
      },
      py::arg("params"), py::arg("pilots"), py::arg("cfg"), py::arg("seed"), py::arg("noise") = true);
  m.def(
      "neg_log_likelihood",
      [](const ParamVector& params, const CArray& y, const CArray& pilots, const SystemConfig& cfg) {
        return neg_log_likelihood(params, received_from(y), pilots_from(pilots), cfg);
      },
      py::arg("params"), py::arg("y"), py::arg("pilots"), py::arg("cfg"));

  py::class_<EstimationResult>(m, "EstimationResult")
      .def_readonly("params", &EstimationResult::params)
      .def_readonly("num_paths", &EstimationResult::num_paths)
      .def_readonly("objective_trace", &EstimationResult::objective_trace)
      .def_readonly("iterations_per_path", &EstimationResult::iterations_per_path)
      .def("mean_inner_iterations", &EstimationResult::mean_inner_iterations);

  m.def(
      "estimate_params",
      [](const CArray& y, const CArray& pilots, const SystemConfig& cfg, const OptimizerConfig& opt) {
        const ReceivedTensor yy = received_from(y);
        const PilotTensor xx = pilots_from(pilots);
        py::gil_scoped_release release;
        return estimate_params(yy, xx, cfg, opt);
      },
      py::arg("y"), py::arg("pilots"), py::arg("cfg"), py::arg("opt") = OptimizerConfig{});
  m.def(
      "select_path_count",
      [](const std::vector<double>& f, double eps) { return select_path_count(f, eps); }, py::arg("partial"),
      py::arg("eps"));

  py::class_<MatchReport>(m, "MatchReport")
      .def_property_readonly("assignments",
                             [](const MatchReport& r) {
                               std::vector<std::pair<std::size_t, std::size_t>> out;
                               for (const auto& a : r.assignments) out.emplace_back(a.truth, a.estimate);
                               return out;
                             })
      .def_readonly("misdetections", &MatchReport::misdetections)
      .def_readonly("misses", &MatchReport::misses)
      .def_readonly("precision", &MatchReport::precision)
      .def_readonly("recall", &MatchReport::recall);
  m.def("greedy_match", &greedy_match, py::arg("truth"), py::arg("estimate"), py::arg("gate") = 0.5);

  py::class_<GeomPath>(m, "GeomPath")
      .def_readonly("distance", &GeomPath::distance)
      .def_readonly("aoa", &GeomPath::aoa)
      .def_readonly("aod", &GeomPath::aod)
      .def_readonly("is_los", &GeomPath::is_los)
      .def_readonly("wall", &GeomPath::wall)
      .def_readonly("tof", &GeomPath::tof)
      .def_readonly("doppler", &GeomPath::doppler)
      .def_property_readonly("reflection_point", [](const GeomPath& g) -> py::object {
        if (!g.reflection_point) return py::none();
        return py::make_tuple(g.reflection_point->x, g.reflection_point->y);
      });
  m.def(
      "trace_paths",
      [](const std::string& environment_json, double carrier_freq) {
        return trace_paths(environment_from_json(nlohmann::json::parse(environment_json)), carrier_freq);
      },
      py::arg("environment_json"), py::arg("carrier_freq") = 60e9);
  m.def("default_environment_json", [] { return environment_to_json(default_environment()).dump(); });

  m.def(
      "run_scenario",
      [](const std::string& scenario_json) {
        const ScenarioConfig cfg = scenario_from_json(nlohmann::json::parse(scenario_json));
        cfg.validate();
        RunResult run;
        {
          py::gil_scoped_release release;
          run = run_experiment(cfg);
        }
        return format_metrics(compute_metrics(run));
      },
      py::arg("scenario_json"), "Runs a scenario given as JSON and returns metrics.csv contents.");
}

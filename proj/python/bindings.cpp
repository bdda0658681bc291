#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "evonet/drift.hpp"
#include "evonet/errors.hpp"
#include "evonet/experiment.hpp"
#include "evonet/memory.hpp"
#include "evonet/relevance.hpp"
#include "evonet/significance.hpp"
#include "evonet/snapshot.hpp"
#include "evonet/streams.hpp"

namespace py = pybind11;
using namespace evonet;

namespace {

StreamBatch make_batch(const Matrix& X, const Matrix& Y, std::size_t index) {
  StreamBatch b;
  b.X = X;
  b.Y = Y;
  b.index = index;
  return b;
}

// Numbers batches in arrival order, as the file-driven harness does.
struct PyLearner {
  Learner learner;
  std::size_t next = 0;
};

py::list batches_to_list(const std::vector<StreamBatch>& batches) {
  py::list out;
  for (const auto& b : batches) out.append(py::make_tuple(b.X, b.Y));
  return out;
}

py::dict event_dict(const StructuralEvent& e) {
  py::dict d;
  d["batch"] = e.batch;
  d["kind"] = std::string(to_string(e.kind));
  d["layer"] = e.layer;
  d["unit"] = e.unit;
  return d;
}

}  // namespace

PYBIND11_MODULE(_evonet, m) {
  m.doc() = "Self-evolving MLP for online stream learning";

  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);

  py::enum_<Mode>(m, "Mode")
      .value("classification", Mode::classification)
      .value("regression", Mode::regression);

  py::enum_<DriftState>(m, "DriftState")
      .value("stable", DriftState::stable)
      .value("warning", DriftState::warning)
      .value("drift", DriftState::drift);

  py::class_<LearnerConfig>(m, "LearnerConfig")
      .def(py::init<>())
      .def_readwrite("mode", &LearnerConfig::mode)
      .def_readwrite("alpha_drift", &LearnerConfig::alpha_drift)
      .def_readwrite("alpha_warning", &LearnerConfig::alpha_warning)
      .def_readwrite("delta", &LearnerConfig::delta)
      .def_readwrite("memory_cap", &LearnerConfig::memory_cap)
      .def_readwrite("base_rate", &LearnerConfig::base_rate)
      .def_readwrite("seed", &LearnerConfig::seed)
      .def_readwrite("min_window", &LearnerConfig::min_window)
      .def_readwrite("spc_warmup", &LearnerConfig::spc_warmup)
      .def_readwrite("layer_cooldown", &LearnerConfig::layer_cooldown)
      .def("disable", [](LearnerConfig& c, const std::string& names) { c.ablation = parse_ablation(names); },
           py::arg("names"), "Comma list of components to switch off");

  py::class_<BatchMetrics>(m, "BatchMetrics")
      .def_readonly("batch_index", &BatchMetrics::batch_index)
      .def_readonly("samples", &BatchMetrics::samples)
      .def_readonly("accuracy", &BatchMetrics::accuracy)
      .def_readonly("rmse", &BatchMetrics::rmse)
      .def_readonly("ndei", &BatchMetrics::ndei)
      .def_readonly("loss", &BatchMetrics::loss)
      .def_readonly("layers", &BatchMetrics::layers)
      .def_readonly("nodes", &BatchMetrics::nodes)
      .def_readonly("params", &BatchMetrics::params)
      .def_readonly("drift_state", &BatchMetrics::drift_state)
      .def_readonly("memory_size", &BatchMetrics::memory_size)
      .def_property_readonly("events",
                             [](const BatchMetrics& b) {
                               py::list out;
                               for (const auto& e : b.events) out.append(event_dict(e));
                               return out;
                             })
      .def("to_json", [](const BatchMetrics& b) { return metrics_record(b, false); });

  py::class_<EvolvingNetwork>(m, "Network")
      .def_property_readonly("mode", &EvolvingNetwork::mode)
      .def_property_readonly("input_dim", &EvolvingNetwork::input_dim)
      .def_property_readonly("output_dim", &EvolvingNetwork::output_dim)
      .def_property_readonly("depth", &EvolvingNetwork::depth)
      .def_property_readonly("widths", &EvolvingNetwork::widths)
      .def_property_readonly("parameter_count", &EvolvingNetwork::parameter_count)
      .def("predict", [](const EvolvingNetwork& n, const Matrix& X) { return n.forward(X).output; },
           py::arg("X"))
      .def("to_snapshot", [](const EvolvingNetwork& n) { return to_snapshot(n); })
      .def_static("from_snapshot", &from_snapshot, py::arg("text"));

  py::class_<PyLearner>(m, "Learner")
      .def(py::init([](std::size_t n, std::size_t m_out, LearnerConfig c) {
             return PyLearner{Learner(n, m_out, std::move(c))};
           }),
           py::arg("input_dim"), py::arg("output_dim"), py::arg("config") = LearnerConfig{})
      .def(
          "process_batch",
          [](PyLearner& l, const Matrix& X, const Matrix& Y) {
            auto metrics = l.learner.process_batch(make_batch(X, Y, l.next));
            ++l.next;
            return metrics;
          },
          py::arg("X"), py::arg("Y"), "Test-then-train on one batch")
      .def_property_readonly(
          "network", [](const PyLearner& l) -> const EvolvingNetwork& { return l.learner.network(); },
          py::return_value_policy::reference_internal)
      .def_property_readonly("memory_size", [](const PyLearner& l) { return l.learner.memory().size(); });

  py::class_<DriftDetector>(m, "DriftDetector")
      .def(py::init([](Mode mode, double alpha_drift, double alpha_warning, std::size_t min_window) {
             return DriftDetector(mode, DriftConfig{alpha_drift, alpha_warning, min_window});
           }),
           py::arg("mode") = Mode::classification, py::arg("alpha_drift") = 1e-4, py::arg("alpha_warning") = 5e-4,
           py::arg("min_window") = 1000)
      .def("evaluate", [](DriftDetector& d, const std::vector<double>& e) { return d.evaluate(e); },
           py::arg("errors"))
      .def("find_switching_point", &DriftDetector::find_switching_point)
      .def_property_readonly("state", &DriftDetector::state)
      .def_property_readonly("size", [](const DriftDetector& d) { return d.record().size(); })
      .def("reset", &DriftDetector::reset);

  py::class_<AdaptiveMemory>(m, "AdaptiveMemory")
      .def(py::init([](std::size_t n, std::size_t m_out, Mode mode, double delta, std::size_t cap) {
             return AdaptiveMemory(n, m_out, MemoryConfig{mode, delta, 1e-2, cap});
           }),
           py::arg("input_dim"), py::arg("output_dim"), py::arg("mode") = Mode::classification,
           py::arg("delta") = 0.55, py::arg("cap") = 0)
      .def("update_stats", [](AdaptiveMemory& a, const RowVector& x) { a.update_stats(x); }, py::arg("x"))
      .def("mahalanobis_sq", [](const AdaptiveMemory& a, const RowVector& x) { return a.mahalanobis_sq(x); },
           py::arg("x"))
      .def(
          "consider_sample",
          [](AdaptiveMemory& a, const RowVector& x, const RowVector& y, std::optional<std::vector<double>> out) {
            if (!out) return a.consider_sample(x, y);
            return a.consider_sample(x, y, std::span<const double>(*out));
          },
          py::arg("x"), py::arg("y"), py::arg("output_row") = py::none())
      .def_property_readonly("center", &AdaptiveMemory::center)
      .def_property_readonly("inverse_covariance", &AdaptiveMemory::inverse_covariance)
      .def_property_readonly("size", &AdaptiveMemory::size)
      .def_property_readonly("thresholds",
                             [](const AdaptiveMemory& a) { return py::make_tuple(a.lower_threshold(), a.upper_threshold()); });

  m.def("hoeffding_bound", &hoeffding_bound, py::arg("count"), py::arg("alpha"), py::arg("range") = 1.0);
  m.def("chi_square_thresholds", &chi_square_thresholds, py::arg("dof"));
  m.def("expected_output", &expected_output, py::arg("network"), py::arg("mu"), py::arg("sigma2"));
  m.def("learning_rates", [](const std::vector<double>& rs, double max_rate) { return learning_rates(rs, max_rate); },
        py::arg("scores"), py::arg("max_rate") = 0.01);

  m.def(
      "generate_sea",
      [](std::vector<double> thresholds, std::size_t samples_per_concept, double noise_rate, std::size_t batch_size,
         std::uint64_t seed) {
        return batches_to_list(generate_sea(SeaConfig{thresholds, samples_per_concept, noise_rate, batch_size, seed}));
      },
      py::arg("thresholds") = std::vector<double>{8.0, 9.0, 7.0, 9.5}, py::arg("samples_per_concept") = 50000,
      py::arg("noise_rate") = 0.1, py::arg("batch_size") = 1000, py::arg("seed") = 1,
      "List of (X, Y) batches; Y is one-hot");
  m.def(
      "generate_regression",
      [](std::vector<double> omegas, std::size_t samples_per_concept, double noise_std, std::size_t outputs,
         std::size_t batch_size, std::uint64_t seed) {
        return batches_to_list(generate_drifting_regression(
            RegressionStreamConfig{omegas, samples_per_concept, noise_std, outputs, batch_size, seed}));
      },
      py::arg("omegas") = std::vector<double>{1.0, 4.0, 2.0}, py::arg("samples_per_concept") = 10000,
      py::arg("noise_std") = 0.05, py::arg("outputs") = 1, py::arg("batch_size") = 500, py::arg("seed") = 1);

  m.def(
      "run_experiment",
      [](const std::string& config_json, std::optional<std::uint64_t> seed) {
        auto cfg = parse_experiment(config_json);
        if (seed) apply_seed(cfg, *seed);
        PrequentialResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(cfg);
        }
        std::ostringstream out;
        write_metrics(out, result, false);
        py::dict d;
        d["batches"] = result.batches;
        d["summary"] = summary_record(result.summary, false);
        d["metrics"] = out.str();
        return d;
      },
      py::arg("config_json") = "{}", py::arg("seed") = py::none(),
      "Runs a full prequential experiment from a JSON config; returns batches, summary JSON and the metrics file text");
}

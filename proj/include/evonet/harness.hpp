#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "evonet/drift.hpp"
#include "evonet/memory.hpp"
#include "evonet/network.hpp"
#include "evonet/significance.hpp"

namespace evonet {

struct AblationSwitches {
  bool disable_layer_growing = false;
  bool disable_node_pruning = false;
  bool disable_adaptive_memory = false;
  bool disable_soft_forgetting = false;

  bool any() const {
    return disable_layer_growing || disable_node_pruning || disable_adaptive_memory ||
           disable_soft_forgetting;
  }
};

/// Parses a comma list of switch names: layer_growing, node_pruning,
/// adaptive_memory, soft_forgetting (an optional "disable_" prefix is accepted).
AblationSwitches parse_ablation(const std::string& comma_list);
std::vector<std::string> ablation_names(const AblationSwitches& switches);

struct LearnerConfig {
  Mode mode = Mode::classification;
  double alpha_drift = 1e-4;
  double alpha_warning = 5e-4;
  double delta = 0.55;
  std::size_t memory_cap = 0;
  double base_rate = 0.01;
  std::uint64_t seed = 1;
  /// Drift-detector window; 0 means the size of the first batch.
  std::size_t min_window = 0;
  std::size_t spc_warmup = 10;
  /// Batches after a layer insertion during which drift verdicts are ignored.
  std::size_t layer_cooldown = 10;
  AblationSwitches ablation;
};

enum class EventKind { grow, prune, layer };

std::string_view to_string(EventKind kind);

struct StructuralEvent {
  std::size_t batch = 0;
  EventKind kind = EventKind::grow;
  std::size_t layer = 0;  // 0-based layer the event touched
  std::size_t unit = 0;   // unit index for grow/prune, new depth - 1 for layer
};

struct BatchMetrics {
  std::size_t batch_index = 0;
  std::size_t samples = 0;
  Mode mode = Mode::classification;
  double accuracy = 0.0;  // classification
  double rmse = 0.0;      // regression
  double ndei = 0.0;      // regression
  double test_loss = 0.0;
  double loss = 0.0;      // mean pre-update loss of the training pass
  std::size_t layers = 0;
  std::vector<std::size_t> nodes;
  std::size_t params = 0;
  DriftState drift_state = DriftState::stable;
  std::vector<StructuralEvent> events;
  std::size_t memory_size = 0;
  double wall_time = 0.0;  // seconds
};

struct RunSummary {
  std::size_t batches = 0;
  Mode mode = Mode::classification;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double ndei_mean = 0.0;
  double ndei_std = 0.0;
  double loss_mean = 0.0;
  double layers_mean = 0.0;
  double nodes_mean = 0.0;
  double params_mean = 0.0;
  std::size_t final_layers = 0;
  std::vector<std::size_t> final_nodes;
  std::size_t grow_events = 0;
  std::size_t prune_events = 0;
  std::size_t layer_events = 0;
  double runtime = 0.0;  // seconds
};

/// Online learner: the evolving network together with its significance
/// monitors, drift detector, replay memory and random source.
class Learner {
 public:
  Learner(std::size_t input_dim, std::size_t output_dim, LearnerConfig config);

  /// Test-then-train on one batch.
  BatchMetrics process_batch(const StreamBatch& batch);

  const EvolvingNetwork& network() const { return net_; }
  const SignificanceState& significance() const { return significance_; }
  const DriftDetector& detector() const;
  const AdaptiveMemory& memory() const { return memory_; }
  const LearnerConfig& config() const { return config_; }

 private:
  void test_phase(const StreamBatch& batch, BatchMetrics& metrics, std::vector<double>& errors,
                  ForwardTrace& trace);
  std::vector<double> hidden_rates(const ForwardTrace& trace, const Matrix& Y) const;
  double train_adaptive(const StreamBatch& batch, std::vector<double> rates, BatchMetrics& metrics);
  double train_after_insertion(const StreamBatch& batch, std::vector<double> rates,
                               BatchMetrics& metrics);

  LearnerConfig config_;
  Rng rng_;
  EvolvingNetwork net_;
  SignificanceState significance_;
  std::optional<DriftDetector> detector_;
  AdaptiveMemory memory_;
  std::size_t batches_seen_ = 0;
  std::optional<std::size_t> last_insertion_;
};

struct PrequentialResult {
  std::vector<BatchMetrics> batches;
  RunSummary summary;
};

using BatchCallback = std::function<void(const BatchMetrics&)>;

/// Runs process_batch over the whole stream. Errors are rethrown with the
/// failing batch index.
PrequentialResult run_prequential(const std::vector<StreamBatch>& stream, const LearnerConfig& config,
                                  const BatchCallback& on_batch = {});

RunSummary summarize(const std::vector<BatchMetrics>& batches, double runtime);

/// One JSON object per line. Timing fields are only emitted when
/// `with_timing` is set, so metric files of identical runs compare equal.
std::string metrics_record(const BatchMetrics& m, bool with_timing);
std::string summary_record(const RunSummary& s, bool with_timing);
void write_metrics(std::ostream& out, const PrequentialResult& result, bool with_timing);

}  // namespace evonet

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "evonet/harness.hpp"
#include "evonet/streams.hpp"

namespace evonet {

using StreamSpec = std::variant<SeaConfig, RegressionStreamConfig, CsvStreamConfig>;

/// Everything needed to reproduce one prequential run.
///
/// Config files are JSON objects. Recognised keys:
///
///   mode            "classification" | "regression"
///   seed            integer, drives both the generator and the learner
///   alpha_drift     drift significance level (default 1e-4)
///   alpha_warning   warning significance level (default 5e-4)
///   delta           confidence threshold for hard examples (default 0.55)
///   memory_cap      replay memory capacity, 0 = unlimited
///   base_rate       SGD rate of new layers and the head (default 0.01)
///   min_window      drift-detector window, 0 = first batch size
///   spc_warmup      samples before grow/prune rules may fire (>= 10)
///   layer_cooldown  batches after a layer insertion that ignore drift verdicts
///   disable         list of ablation switches
///   record_timing   include wall-clock fields in the metrics file
///   normalization   "zscore" (default) | "minmax" | "none"; feature scaling
///                   fitted on the first batch
///   target_normalization  "minmax" (default) | "zscore" | "none"; regression
///                   targets only, fitted on the first batch
///   stream          {"kind": "sea" | "regression" | "csv", ...generator keys}
///
/// Unknown keys are rejected.
struct ExperimentConfig {
  LearnerConfig learner;
  StreamSpec stream = SeaConfig{};
  bool record_timing = false;
  Normalization normalization = Normalization::zscore;
  Normalization target_normalization = Normalization::minmax;
};

/// Relative CSV paths are resolved against `base_dir`. Without a "stream"
/// key the default generator for the mode is used.
ExperimentConfig parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Reseeds both the generator and the learner.
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

std::vector<StreamBatch> build_stream(const ExperimentConfig& config);

PrequentialResult run_experiment(const ExperimentConfig& config, const BatchCallback& on_batch = {});

struct AblationRow {
  std::string name;  // "full" or the disabled component
  AblationSwitches switches;
  std::vector<std::uint64_t> seeds;
  std::vector<RunSummary> runs;

  double accuracy_mean() const;
  double accuracy_std() const;  // across seeds
  double rmse_mean() const;
  double layers_mean() const;
  double final_layers_max() const;
  double nodes_mean() const;
  double params_mean() const;
  double runtime_mean() const;
};

/// Full configuration followed by one row per single-switch ablation, each
/// run over every seed. Runs execute on up to `threads` worker threads
/// (0 = hardware concurrency); results do not depend on the thread count.
std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      const std::vector<AblationSwitches>& ablations,
                                      const std::vector<std::uint64_t>& seeds, unsigned threads = 0);

/// Splits an AblationSwitches set into its single-switch components.
std::vector<AblationSwitches> single_switches(const AblationSwitches& all);

std::string format_ablation_table(const std::vector<AblationRow>& rows, Mode mode, bool with_timing);

}  // namespace evonet

#include "evonet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "evonet/errors.hpp"

namespace evonet {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ParameterError("unknown key '" + key + "' in " + where);
}

template <typename T>
void read_if(const json& obj, const char* key, T& target) {
  if (obj.contains(key)) target = obj.at(key).get<T>();
}

StreamSpec parse_stream(const json& js) {
  if (!js.is_object()) throw ParameterError("'stream' must be an object");
  const std::string kind = js.value("kind", "sea");
  if (kind == "sea") {
    reject_unknown(js, {"kind", "thresholds", "samples_per_concept", "noise_rate", "batch_size"}, "sea stream");
    SeaConfig c;
    read_if(js, "thresholds", c.concept_thresholds);
    read_if(js, "samples_per_concept", c.samples_per_concept);
    read_if(js, "noise_rate", c.noise_rate);
    read_if(js, "batch_size", c.batch_size);
    if (c.concept_thresholds.empty()) throw ParameterError("sea stream needs thresholds");
    if (!(c.noise_rate >= 0.0 && c.noise_rate < 0.5)) throw ParameterError("noise_rate must lie in [0, 0.5)");
    if (c.batch_size == 0 || c.samples_per_concept == 0) throw ParameterError("sizes must be positive");
    return c;
  }
  if (kind == "regression") {
    reject_unknown(js, {"kind", "omegas", "samples_per_concept", "noise_std", "outputs", "batch_size", "concepts"},
                   "regression stream");
    RegressionStreamConfig c;
    read_if(js, "omegas", c.omegas);
    if (js.contains("concepts")) {
      const auto n = js.at("concepts").get<std::size_t>();
      if (n == 0) throw ParameterError("concepts must be positive");
      const std::vector<double> base = c.omegas;
      c.omegas.clear();
      for (std::size_t i = 0; i < n; ++i) c.omegas.push_back(base[i % base.size()] + static_cast<double>(i / base.size()));
    }
    read_if(js, "samples_per_concept", c.samples_per_concept);
    read_if(js, "noise_std", c.noise_std);
    read_if(js, "outputs", c.outputs);
    read_if(js, "batch_size", c.batch_size);
    if (c.omegas.empty()) throw ParameterError("regression stream needs omegas");
    if (c.outputs < 1 || c.outputs > 2) throw ParameterError("outputs must be 1 or 2");
    if (c.batch_size == 0 || c.samples_per_concept == 0) throw ParameterError("sizes must be positive");
    return c;
  }
  if (kind == "csv") {
    reject_unknown(js, {"kind", "path", "targets", "normalization", "batch_size", "classes"}, "csv stream");
    CsvStreamConfig c;
    c.path = js.at("path").get<std::string>();
    c.target_columns = js.at("targets").get<std::vector<std::string>>();
    if (js.contains("normalization")) c.normalization = parse_normalization(js.at("normalization").get<std::string>());
    read_if(js, "batch_size", c.batch_size);
    read_if(js, "classes", c.num_classes);
    if (c.batch_size == 0) throw ParameterError("batch_size must be positive");
    return c;
  }
  throw ParameterError("unknown stream kind '" + kind + "'");
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParameterError("config must be a JSON object");
  reject_unknown(doc,
                 {"mode", "seed", "alpha_drift", "alpha_warning", "delta", "memory_cap", "base_rate",
                  "min_window", "spc_warmup", "layer_cooldown", "disable", "record_timing", "normalization", "target_normalization", "stream"},
                 "config");
  ExperimentConfig cfg;
  try {
    if (doc.contains("mode")) cfg.learner.mode = parse_mode(doc.at("mode").get<std::string>());
    read_if(doc, "seed", cfg.learner.seed);
    read_if(doc, "alpha_drift", cfg.learner.alpha_drift);
    read_if(doc, "alpha_warning", cfg.learner.alpha_warning);
    read_if(doc, "delta", cfg.learner.delta);
    read_if(doc, "memory_cap", cfg.learner.memory_cap);
    read_if(doc, "base_rate", cfg.learner.base_rate);
    read_if(doc, "min_window", cfg.learner.min_window);
    read_if(doc, "spc_warmup", cfg.learner.spc_warmup);
    read_if(doc, "layer_cooldown", cfg.learner.layer_cooldown);
    read_if(doc, "record_timing", cfg.record_timing);
    if (doc.contains("normalization")) cfg.normalization = parse_normalization(doc.at("normalization").get<std::string>());
    if (doc.contains("target_normalization"))
      cfg.target_normalization = parse_normalization(doc.at("target_normalization").get<std::string>());
    if (doc.contains("disable")) {
      std::string joined;
      for (const auto& item : doc.at("disable")) joined += item.get<std::string>() + ",";
      cfg.learner.ablation = parse_ablation(joined);
    }
    if (doc.contains("stream")) cfg.stream = parse_stream(doc.at("stream"));
    else if (cfg.learner.mode == Mode::regression) cfg.stream = RegressionStreamConfig{};
  } catch (const json::exception& e) {
    throw ParameterError(std::string("bad config value: ") + e.what());
  }
  if (auto* csv = std::get_if<CsvStreamConfig>(&cfg.stream)) {
    csv->mode = cfg.learner.mode;
    if (csv->path.is_relative() && !base_dir.empty()) csv->path = base_dir / csv->path;
  }
  if (std::holds_alternative<SeaConfig>(cfg.stream) && cfg.learner.mode != Mode::classification)
    throw ParameterError("the SEA stream is a classification problem");
  if (std::holds_alternative<RegressionStreamConfig>(cfg.stream) && cfg.learner.mode != Mode::regression)
    throw ParameterError("the regression stream needs mode = regression");
  if (!(cfg.learner.alpha_drift > 0.0 && cfg.learner.alpha_warning < 1.0 &&
        cfg.learner.alpha_drift < cfg.learner.alpha_warning))
    throw ParameterError("need 0 < alpha_drift < alpha_warning < 1");
  if (!(cfg.learner.delta > 0.0 && cfg.learner.delta <= 1.0)) throw ParameterError("delta must lie in (0, 1]");
  if (cfg.learner.spc_warmup < 10) throw ParameterError("spc_warmup must be at least 10");
  if (!(cfg.learner.base_rate >= 0.0)) throw ParameterError("base_rate must be non-negative");
  apply_seed(cfg, cfg.learner.seed);
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment(buffer.str(), path.parent_path());
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.learner.seed = seed;
  std::visit(
      [seed](auto& spec) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(spec)>, CsvStreamConfig>) spec.seed = seed;
      },
      config.stream);
}

std::vector<StreamBatch> build_stream(const ExperimentConfig& config) {
  auto batches = std::visit(
      [](const auto& spec) -> std::vector<StreamBatch> {
        using T = std::decay_t<decltype(spec)>;
        if constexpr (std::is_same_v<T, SeaConfig>) return generate_sea(spec);
        else if constexpr (std::is_same_v<T, RegressionStreamConfig>) return generate_drifting_regression(spec);
        else return ingest_csv(spec);
      },
      config.stream);
  normalize_batches(batches, config.normalization);
  if (config.learner.mode == Mode::regression) normalize_targets(batches, config.target_normalization);
  return batches;
}

PrequentialResult run_experiment(const ExperimentConfig& config, const BatchCallback& on_batch) {
  return run_prequential(build_stream(config), config.learner, on_batch);
}

namespace {

template <typename F>
double average(const std::vector<RunSummary>& runs, F field) {
  if (runs.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : runs) total += field(r);
  return total / static_cast<double>(runs.size());
}

}  // namespace

double AblationRow::accuracy_mean() const {
  return average(runs, [](const RunSummary& r) { return r.accuracy_mean; });
}

double AblationRow::accuracy_std() const {
  const double mean = accuracy_mean();
  return std::sqrt(average(runs, [mean](const RunSummary& r) {
    return (r.accuracy_mean - mean) * (r.accuracy_mean - mean);
  }));
}

double AblationRow::rmse_mean() const {
  return average(runs, [](const RunSummary& r) { return r.rmse_mean; });
}

double AblationRow::layers_mean() const {
  return average(runs, [](const RunSummary& r) { return r.layers_mean; });
}

double AblationRow::final_layers_max() const {
  double top = 0.0;
  for (const auto& r : runs) top = std::max(top, static_cast<double>(r.final_layers));
  return top;
}

double AblationRow::nodes_mean() const {
  return average(runs, [](const RunSummary& r) { return r.nodes_mean; });
}

double AblationRow::params_mean() const {
  return average(runs, [](const RunSummary& r) { return r.params_mean; });
}

double AblationRow::runtime_mean() const {
  return average(runs, [](const RunSummary& r) { return r.runtime; });
}

std::vector<AblationSwitches> single_switches(const AblationSwitches& all) {
  std::vector<AblationSwitches> out;
  if (all.disable_layer_growing) out.push_back({.disable_layer_growing = true});
  if (all.disable_node_pruning) out.push_back({.disable_node_pruning = true});
  if (all.disable_adaptive_memory) out.push_back({.disable_adaptive_memory = true});
  if (all.disable_soft_forgetting) out.push_back({.disable_soft_forgetting = true});
  return out;
}

std::vector<AblationRow> run_ablation(const ExperimentConfig& base,
                                      const std::vector<AblationSwitches>& ablations,
                                      const std::vector<std::uint64_t>& seeds, unsigned threads) {
  if (seeds.empty()) throw ParameterError("ablation needs at least one seed");
  std::vector<AblationRow> rows;
  AblationRow full;
  full.name = "full";
  rows.push_back(full);
  for (const auto& sw : ablations) {
    const auto names = ablation_names(sw);
    if (names.empty()) throw ParameterError("ablation entry disables nothing");
    AblationRow row;
    row.switches = sw;
    for (const auto& n : names) row.name += (row.name.empty() ? "without " : "+") + n;
    rows.push_back(row);
  }
  for (auto& row : rows) {
    row.seeds = seeds;
    row.runs.resize(seeds.size());
  }

  struct Job {
    std::size_t row;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({r, s});

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        ExperimentConfig cfg = base;
        cfg.learner.ablation = rows[jobs[j].row].switches;
        apply_seed(cfg, seeds[jobs[j].seed]);
        rows[jobs[j].row].runs[jobs[j].seed] = run_experiment(cfg).summary;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows, Mode mode, bool with_timing) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "configuration" << std::right << std::setw(20)
      << (mode == Mode::classification ? "accuracy (%)" : "rmse") << std::setw(10) << "layers"
      << std::setw(10) << "nodes" << std::setw(12) << "params";
  if (with_timing) out << std::setw(10) << "time (s)";
  out << '\n';
  for (const auto& row : rows) {
    std::ostringstream metric;
    metric << std::fixed;
    if (mode == Mode::classification)
      metric << std::setprecision(2) << 100.0 * row.accuracy_mean() << " +- " << 100.0 * row.accuracy_std();
    else
      metric << std::setprecision(4) << row.rmse_mean();
    out << std::left << std::setw(28) << row.name << std::right << std::setw(20) << metric.str()
        << std::fixed << std::setprecision(2) << std::setw(10) << row.layers_mean() << std::setw(10)
        << row.nodes_mean() << std::setw(12) << row.params_mean();
    if (with_timing) out << std::setw(10) << row.runtime_mean();
    out << '\n';
  }
  return out.str();
}

}  // namespace evonet

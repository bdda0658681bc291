#include "evonet/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evonet/errors.hpp"
#include "evonet/experiment.hpp"

namespace evonet {

namespace {

using nlohmann::json;

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "metrics.jsonl";
  std::optional<std::string> mode;
  std::optional<std::string> disable;
  std::optional<double> alpha_drift;
  std::optional<double> alpha_warning;
  std::optional<double> delta;
  bool timing = false;
};

struct GenerateOptions {
  std::string kind;
  std::string config;
  std::string out;
  std::optional<std::size_t> concepts;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples_per_concept;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> outputs;
};

struct AblateOptions {
  std::string config;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string disable = "layer_growing,node_pruning,adaptive_memory,soft_forgetting";
  std::string out;
  unsigned threads = 0;
  bool timing = false;
};

json read_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParameterError(path + ": " + e.what());
  }
}

std::filesystem::path config_dir(const std::string& path) {
  return path.empty() ? std::filesystem::path{} : std::filesystem::path(path).parent_path();
}

ExperimentConfig resolve_run_config(const RunOptions& o) {
  json doc = read_config_json(o.config);
  if (!doc.is_object()) throw ParameterError("config must be a JSON object");
  if (o.mode) {
    doc["mode"] = *o.mode;
    if (doc.contains("stream") && doc["stream"].value("kind", "sea") != "csv") {
      const std::string wanted = *o.mode == "regression" ? "regression" : "sea";
      if (doc["stream"].value("kind", "sea") != wanted) doc.erase("stream");
    }
  }
  if (o.seed) doc["seed"] = *o.seed;
  if (o.alpha_drift) doc["alpha_drift"] = *o.alpha_drift;
  if (o.alpha_warning) doc["alpha_warning"] = *o.alpha_warning;
  if (o.delta) doc["delta"] = *o.delta;
  if (o.disable) {
    json list = json::array();
    for (const auto& name : ablation_names(parse_ablation(*o.disable))) list.push_back(name);
    doc["disable"] = list;
  }
  if (o.timing) doc["record_timing"] = true;
  return parse_experiment(doc.dump(), config_dir(o.config));
}

void print_summary(std::ostream& out, const RunSummary& s, bool timing) {
  out << std::fixed;
  if (s.mode == Mode::classification)
    out << "accuracy  " << std::setprecision(2) << 100.0 * s.accuracy_mean << " +- " << 100.0 * s.accuracy_std
        << " %\n";
  else
    out << "rmse      " << std::setprecision(4) << s.rmse_mean << " +- " << s.rmse_std << "\nndei      "
        << s.ndei_mean << " +- " << s.ndei_std << '\n';
  out << "batches   " << s.batches << "\nlayers    " << s.final_layers << " (mean " << std::setprecision(2)
      << s.layers_mean << ")\nnodes     ";
  for (std::size_t i = 0; i < s.final_nodes.size(); ++i) out << (i ? " " : "") << s.final_nodes[i];
  out << " (mean total " << s.nodes_mean << ")\nevents    grow " << s.grow_events << ", prune " << s.prune_events
      << ", layer " << s.layer_events << '\n';
  if (timing) out << "runtime   " << std::setprecision(2) << s.runtime << " s\n";
}

int cmd_run(const RunOptions& o, std::ostream& out) {
  const ExperimentConfig cfg = resolve_run_config(o);
  const auto result = run_experiment(cfg);
  std::ofstream file(o.out);
  if (!file) throw DataError("cannot write " + o.out);
  write_metrics(file, result, cfg.record_timing);
  if (!file) throw DataError("failed while writing " + o.out);
  print_summary(out, result.summary, true);
  out << "metrics   " << o.out << '\n';
  return 0;
}

std::vector<double> cycle(const std::vector<double>& base, std::size_t n, double step) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(base[i % base.size()] + step * static_cast<double>(i / base.size()));
  return out;
}

int cmd_generate(const GenerateOptions& o, std::ostream& out) {
  ExperimentConfig cfg;
  if (!o.config.empty()) cfg = parse_experiment(read_config_json(o.config).dump(), config_dir(o.config));
  if (o.kind == "sea") {
    SeaConfig sea = std::holds_alternative<SeaConfig>(cfg.stream) ? std::get<SeaConfig>(cfg.stream) : SeaConfig{};
    if (o.concepts) sea.concept_thresholds = cycle(sea.concept_thresholds, *o.concepts, 0.0);
    if (o.seed) sea.seed = *o.seed;
    if (o.samples_per_concept) sea.samples_per_concept = *o.samples_per_concept;
    if (o.batch_size) sea.batch_size = *o.batch_size;
    const auto batches = generate_sea(sea);
    write_csv(o.out, batches, Mode::classification, {"x1", "x2", "x3"}, {"class"});
    write_metadata(o.out + ".meta.json", sea_metadata(sea));
    out << "wrote " << total_rows(batches) << " rows to " << o.out << '\n';
    return 0;
  }
  RegressionStreamConfig reg = std::holds_alternative<RegressionStreamConfig>(cfg.stream)
                                   ? std::get<RegressionStreamConfig>(cfg.stream)
                                   : RegressionStreamConfig{};
  if (o.concepts) reg.omegas = cycle(reg.omegas, *o.concepts, 1.0);
  if (o.seed) reg.seed = *o.seed;
  if (o.samples_per_concept) reg.samples_per_concept = *o.samples_per_concept;
  if (o.batch_size) reg.batch_size = *o.batch_size;
  if (o.outputs) reg.outputs = *o.outputs;
  const auto batches = generate_drifting_regression(reg);
  std::vector<std::string> targets{"y1"};
  if (reg.outputs == 2) targets.emplace_back("y2");
  write_csv(o.out, batches, Mode::regression, {"x1", "x2"}, targets);
  write_metadata(o.out + ".meta.json", regression_metadata(reg));
  out << "wrote " << total_rows(batches) << " rows to " << o.out << '\n';
  return 0;
}

int cmd_ablate(const AblateOptions& o, std::ostream& out) {
  const ExperimentConfig base = parse_experiment(read_config_json(o.config).dump(), config_dir(o.config));
  const auto switches = single_switches(parse_ablation(o.disable));
  const auto rows = run_ablation(base, switches, o.seeds, o.threads);
  const std::string table = format_ablation_table(rows, base.learner.mode, o.timing);
  out << table;
  if (!o.out.empty()) {
    std::ofstream file(o.out);
    if (!file) throw DataError("cannot write " + o.out);
    file << table;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-evolving neural network for drifting data streams", "evonet"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "prequential run; writes one JSON record per batch");
  run_cmd->add_option("--config", run.config, "JSON experiment config");
  run_cmd->add_option("--seed", run.seed, "seed for generator and learner");
  run_cmd->add_option("--out", run.out, "metrics file (JSON lines)")->capture_default_str();
  run_cmd->add_option("--mode", run.mode, "classification or regression")
      ->check(CLI::IsMember({"classification", "regression"}));
  run_cmd->add_option("--disable", run.disable, "comma list of components to switch off");
  run_cmd->add_option("--alpha-drift", run.alpha_drift, "drift significance level");
  run_cmd->add_option("--alpha-warning", run.alpha_warning, "warning significance level");
  run_cmd->add_option("--delta", run.delta, "confidence threshold for hard examples");
  run_cmd->add_flag("--timing", run.timing, "record wall-clock time per batch");

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "write a synthetic stream as CSV");
  gen_cmd->add_option("kind", gen.kind, "sea or regression")->required()->check(CLI::IsMember({"sea", "regression"}));
  gen_cmd->add_option("--config", gen.config, "JSON experiment config providing generator settings");
  gen_cmd->add_option("--out", gen.out, "CSV path; metadata goes to <out>.meta.json")->required();
  gen_cmd->add_option("--concepts", gen.concepts, "number of concepts")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--samples-per-concept", gen.samples_per_concept)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--batch-size", gen.batch_size)->check(CLI::PositiveNumber);
  gen_cmd->add_option("--outputs", gen.outputs, "regression targets (1 or 2)")->check(CLI::Range(1, 2));

  AblateOptions abl;
  auto* abl_cmd = app.add_subcommand("ablate", "compare the full learner with single-component ablations");
  abl_cmd->add_option("--config", abl.config, "JSON experiment config");
  abl_cmd->add_option("--seeds", abl.seeds, "seed list")->delimiter(',')->capture_default_str();
  abl_cmd->add_option("--disable", abl.disable, "components to ablate, one row each")->capture_default_str();
  abl_cmd->add_option("--out", abl.out, "also write the table to this file");
  abl_cmd->add_option("--threads", abl.threads, "worker threads (0 = all cores)");
  abl_cmd->add_flag("--timing", abl.timing, "include mean runtime column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*gen_cmd) return cmd_generate(gen, out);
    return cmd_ablate(abl, out);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace evonet

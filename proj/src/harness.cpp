#include "evonet/harness.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evonet/errors.hpp"
#include "evonet/relevance.hpp"

namespace evonet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string normalise_switch(std::string name) {
  const auto first = name.find_first_not_of(" \t");
  const auto last = name.find_last_not_of(" \t");
  name = first == std::string::npos ? std::string() : name.substr(first, last - first + 1);
  if (name.rfind("disable_", 0) == 0) name = name.substr(8);
  for (char& ch : name)
    if (ch == '-') ch = '_';
  return name;
}

}  // namespace

AblationSwitches parse_ablation(const std::string& comma_list) {
  AblationSwitches out;
  std::stringstream ss(comma_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string name = normalise_switch(item);
    if (name.empty()) continue;
    if (name == "layer_growing") out.disable_layer_growing = true;
    else if (name == "node_pruning") out.disable_node_pruning = true;
    else if (name == "adaptive_memory") out.disable_adaptive_memory = true;
    else if (name == "soft_forgetting") out.disable_soft_forgetting = true;
    else throw ParameterError("unknown ablation switch '" + item + "'");
  }
  return out;
}

std::vector<std::string> ablation_names(const AblationSwitches& s) {
  std::vector<std::string> out;
  if (s.disable_layer_growing) out.emplace_back("layer_growing");
  if (s.disable_node_pruning) out.emplace_back("node_pruning");
  if (s.disable_adaptive_memory) out.emplace_back("adaptive_memory");
  if (s.disable_soft_forgetting) out.emplace_back("soft_forgetting");
  return out;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::grow: return "grow";
    case EventKind::prune: return "prune";
    case EventKind::layer: return "layer";
  }
  return "grow";
}

Learner::Learner(std::size_t input_dim, std::size_t output_dim, LearnerConfig config)
    : config_(config),
      rng_(config.seed),
      net_(input_dim, output_dim, config.mode, rng_, 1, config.base_rate),
      significance_(input_dim, config.spc_warmup),
      memory_(input_dim, output_dim, MemoryConfig{config.mode, config.delta, 1e-2, config.memory_cap}) {
  if (!(config_.base_rate >= 0.0)) throw ParameterError("base rate must be non-negative");
  // Validates the significance levels even when the window is fixed later.
  DriftDetector probe(config_.mode, DriftConfig{config_.alpha_drift, config_.alpha_warning,
                                                std::max<std::size_t>(config_.min_window, 1)});
  if (config_.min_window > 0) detector_ = std::move(probe);
}

const DriftDetector& Learner::detector() const {
  if (!detector_) throw ContractError("drift detector is created with the first batch");
  return *detector_;
}

void Learner::test_phase(const StreamBatch& batch, BatchMetrics& metrics, std::vector<double>& errors,
                         ForwardTrace& trace) {
  trace = net_.forward(batch.X);
  const Matrix& out = trace.output;
  const auto rows = batch.X.rows();
  errors.resize(static_cast<std::size_t>(rows));

  if (config_.mode == Mode::classification) {
    std::size_t correct = 0;
    double ce = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      Eigen::Index predicted = 0;
      Eigen::Index truth = 0;
      out.row(r).maxCoeff(&predicted);
      batch.Y.row(r).maxCoeff(&truth);
      const bool hit = predicted == truth;
      correct += hit ? 1 : 0;
      errors[static_cast<std::size_t>(r)] = hit ? 0.0 : 1.0;
      ce -= std::log(std::max(out(r, truth), 1e-300));
    }
    metrics.accuracy = static_cast<double>(correct) / static_cast<double>(rows);
    metrics.test_loss = ce / static_cast<double>(rows);
  } else {
    const Matrix diff = out - batch.Y;
    for (Eigen::Index r = 0; r < rows; ++r)
      errors[static_cast<std::size_t>(r)] = diff.row(r).cwiseAbs().mean();
    const double mse = diff.array().square().mean();
    metrics.rmse = std::sqrt(mse);
    metrics.test_loss = mse;
    const Eigen::RowVectorXd centre = batch.Y.colwise().mean();
    const double target_var = (batch.Y.rowwise() - centre).array().square().mean();
    metrics.ndei = metrics.rmse / std::max(std::sqrt(target_var), 1e-12);
  }

  if (!config_.ablation.disable_adaptive_memory) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (config_.mode == Mode::classification) {
        const RowVector row = out.row(r);
        memory_.consider_sample(batch.X.row(r), batch.Y.row(r),
                                std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
      } else {
        memory_.consider_sample(batch.X.row(r), batch.Y.row(r));
      }
      memory_.update_stats(batch.X.row(r));
    }
  }
}

std::vector<double> Learner::hidden_rates(const ForwardTrace& trace, const Matrix& Y) const {
  std::vector<double> rates;
  if (config_.ablation.disable_soft_forgetting || Y.rows() < 2) {
    rates.assign(net_.depth(), config_.base_rate);
  } else {
    const std::vector<double> scores = layer_scores(trace, Y);
    rates = learning_rates(scores, config_.base_rate);
    // The newest layer carries the current concept; gating it would freeze a
    // freshly inserted layer whose relevance starts near zero.
    rates.back() = config_.base_rate;
  }
  rates.push_back(config_.base_rate);
  return rates;
}

double Learner::train_adaptive(const StreamBatch& batch, std::vector<double> rates,
                               BatchMetrics& metrics) {
  significance_.grown_flag = false;
  double total = 0.0;
  const auto rows = batch.X.rows();
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto x = batch.X.row(r);
    const auto y = batch.Y.row(r);
    significance_.input_stats.update(x);
    const Vector mu = significance_.input_stats.mean();
    const Vector sigma2 = significance_.input_stats.variance();

    const ActivationMoments moments = propagate_moments(net_, mu, sigma2);
    const RowVector expected = net_.apply_head(moments.mean.back().transpose());
    const double bias2 = (expected - y).squaredNorm() / static_cast<double>(y.size());
    const Vector head_var =
        net_.head().W.array().square().matrix().transpose() * moments.variance.back();
    const double variance = std::max(0.0, head_var.mean());

    if (update_and_check_grow(significance_, bias2) == GrowDecision::grow) {
      const RowVector error = net_.predict(x) - y;
      net_.add_hidden_unit(std::span<const double>(error.data(), static_cast<std::size_t>(error.size())), rng_);
      metrics.events.push_back({batch.index, EventKind::grow, net_.depth() - 1, net_.top_width() - 1});
    }
    if (!config_.ablation.disable_node_pruning &&
        update_and_check_prune(significance_, variance) == PruneDecision::prune &&
        net_.top_width() > 1) {
      const std::size_t victim = weakest_unit(unit_contributions(net_, mu, sigma2));
      if (net_.remove_hidden_unit(victim))
        metrics.events.push_back({batch.index, EventKind::prune, net_.depth() - 1, victim});
    }
    total += net_.train_sample(x, y, rates);
  }
  return rows > 0 ? total / static_cast<double>(rows) : 0.0;
}

double Learner::train_after_insertion(const StreamBatch& batch, std::vector<double> rates,
                                      BatchMetrics& metrics) {
  std::vector<StreamBatch> warning = detector_->take_warning_buffer();
  net_.add_hidden_layer(1, rng_, config_.base_rate);
  significance_.reset_monitors();
  metrics.events.push_back({batch.index, EventKind::layer, net_.depth() - 1, net_.depth() - 1});

  rates.back() = config_.base_rate;       // new layer
  rates.push_back(config_.base_rate);     // fresh head

  // With the memory ablated nothing is ever stored, so only the warning buffer replays.
  const StreamBatch replay = memory_.replay_set(warning);
  if (replay.X.rows() > 0) net_.train_step(replay.X, replay.Y, rates);

  for (Eigen::Index r = 0; r < batch.X.rows(); ++r) significance_.input_stats.update(batch.X.row(r));
  return net_.train_step(batch.X, batch.Y, rates);
}

BatchMetrics Learner::process_batch(const StreamBatch& batch) {
  const auto start = Clock::now();
  if (static_cast<std::size_t>(batch.X.cols()) != net_.input_dim() ||
      static_cast<std::size_t>(batch.Y.cols()) != net_.output_dim() || batch.X.rows() != batch.Y.rows())
    throw ShapeError("batch " + std::to_string(batch.index) + " does not match the learner's dimensions");
  if (batch.X.rows() == 0) throw ShapeError("batch " + std::to_string(batch.index) + " is empty");
  if (!detector_)
    detector_.emplace(config_.mode, DriftConfig{config_.alpha_drift, config_.alpha_warning,
                                                static_cast<std::size_t>(batch.X.rows())});

  BatchMetrics metrics;
  metrics.batch_index = batch.index;
  metrics.samples = batch.rows();
  metrics.mode = config_.mode;

  std::vector<double> errors;
  ForwardTrace trace;
  test_phase(batch, metrics, errors, trace);

  std::vector<double> rates = hidden_rates(trace, batch.Y);
  DriftState state = detector_->evaluate(errors);
  ++batches_seen_;
  if (state == DriftState::drift && last_insertion_ && batches_seen_ - *last_insertion_ <= config_.layer_cooldown) {
    detector_->take_warning_buffer();
    state = DriftState::stable;
  }
  metrics.drift_state = state;

  if (state == DriftState::drift && !config_.ablation.disable_layer_growing) {
    last_insertion_ = batches_seen_;
    metrics.loss = train_after_insertion(batch, std::move(rates), metrics);
  } else {
    if (state == DriftState::drift) detector_->take_warning_buffer();
    if (state == DriftState::warning) detector_->accumulate_warning(batch);
    metrics.loss = train_adaptive(batch, std::move(rates), metrics);
  }
  if (!std::isfinite(metrics.loss) || !net_.all_finite())
    throw NumericError("training diverged on batch " + std::to_string(batch.index));

  metrics.layers = net_.depth();
  metrics.nodes = net_.widths();
  metrics.params = net_.parameter_count();
  metrics.memory_size = memory_.size();
  metrics.wall_time = seconds_since(start);
  return metrics;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

template <typename F>
MeanStd mean_std(const std::vector<BatchMetrics>& batches, F field) {
  MeanStd out;
  if (batches.empty()) return out;
  for (const auto& b : batches) out.mean += field(b);
  out.mean /= static_cast<double>(batches.size());
  double ss = 0.0;
  for (const auto& b : batches) ss += (field(b) - out.mean) * (field(b) - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(batches.size()));
  return out;
}

}  // namespace

RunSummary summarize(const std::vector<BatchMetrics>& batches, double runtime) {
  RunSummary s;
  s.batches = batches.size();
  s.runtime = runtime;
  if (batches.empty()) return s;
  s.mode = batches.front().mode;
  const auto acc = mean_std(batches, [](const BatchMetrics& b) { return b.accuracy; });
  const auto rmse = mean_std(batches, [](const BatchMetrics& b) { return b.rmse; });
  const auto ndei = mean_std(batches, [](const BatchMetrics& b) { return b.ndei; });
  s.accuracy_mean = acc.mean;
  s.accuracy_std = acc.std;
  s.rmse_mean = rmse.mean;
  s.rmse_std = rmse.std;
  s.ndei_mean = ndei.mean;
  s.ndei_std = ndei.std;
  s.loss_mean = mean_std(batches, [](const BatchMetrics& b) { return b.loss; }).mean;
  s.layers_mean = mean_std(batches, [](const BatchMetrics& b) { return static_cast<double>(b.layers); }).mean;
  s.nodes_mean = mean_std(batches, [](const BatchMetrics& b) {
                   double total = 0.0;
                   for (auto n : b.nodes) total += static_cast<double>(n);
                   return total;
                 }).mean;
  s.params_mean = mean_std(batches, [](const BatchMetrics& b) { return static_cast<double>(b.params); }).mean;
  s.final_layers = batches.back().layers;
  s.final_nodes = batches.back().nodes;
  for (const auto& b : batches) {
    for (const auto& e : b.events) {
      if (e.kind == EventKind::grow) ++s.grow_events;
      else if (e.kind == EventKind::prune) ++s.prune_events;
      else ++s.layer_events;
    }
  }
  return s;
}

PrequentialResult run_prequential(const std::vector<StreamBatch>& stream, const LearnerConfig& config,
                                  const BatchCallback& on_batch) {
  if (stream.empty()) throw ParameterError("prequential run needs at least one batch");
  const auto start = Clock::now();
  Learner learner(static_cast<std::size_t>(stream.front().X.cols()),
                  static_cast<std::size_t>(stream.front().Y.cols()), config);
  PrequentialResult result;
  result.batches.reserve(stream.size());
  for (const auto& batch : stream) {
    try {
      result.batches.push_back(learner.process_batch(batch));
    } catch (const NumericError& e) {
      throw NumericError("batch " + std::to_string(batch.index) + ": " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError("batch " + std::to_string(batch.index) + ": " + e.what());
    }
    if (on_batch) on_batch(result.batches.back());
  }
  result.summary = summarize(result.batches, seconds_since(start));
  return result;
}

std::string metrics_record(const BatchMetrics& m, bool with_timing) {
  nlohmann::ordered_json j;
  j["batch"] = m.batch_index;
  j["samples"] = m.samples;
  if (m.mode == Mode::classification) {
    j["accuracy"] = m.accuracy;
  } else {
    j["rmse"] = m.rmse;
    j["ndei"] = m.ndei;
  }
  j["test_loss"] = m.test_loss;
  j["loss"] = m.loss;
  j["layers"] = m.layers;
  j["nodes"] = m.nodes;
  j["params"] = m.params;
  j["drift_state"] = std::string(to_string(m.drift_state));
  j["memory"] = m.memory_size;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : m.events)
    events.push_back({{"kind", std::string(to_string(e.kind))}, {"layer", e.layer}, {"unit", e.unit}});
  j["events"] = std::move(events);
  if (with_timing) j["wall_time"] = m.wall_time;
  return j.dump();
}

std::string summary_record(const RunSummary& s, bool with_timing) {
  nlohmann::ordered_json j;
  j["summary"] = true;
  j["batches"] = s.batches;
  j["mode"] = std::string(to_string(s.mode));
  if (s.mode == Mode::classification) {
    j["accuracy_mean"] = s.accuracy_mean;
    j["accuracy_std"] = s.accuracy_std;
  } else {
    j["rmse_mean"] = s.rmse_mean;
    j["rmse_std"] = s.rmse_std;
    j["ndei_mean"] = s.ndei_mean;
    j["ndei_std"] = s.ndei_std;
  }
  j["loss_mean"] = s.loss_mean;
  j["layers_mean"] = s.layers_mean;
  j["nodes_mean"] = s.nodes_mean;
  j["params_mean"] = s.params_mean;
  j["final_layers"] = s.final_layers;
  j["final_nodes"] = s.final_nodes;
  j["grow_events"] = s.grow_events;
  j["prune_events"] = s.prune_events;
  j["layer_events"] = s.layer_events;
  if (with_timing) j["runtime"] = s.runtime;
  return j.dump();
}

void write_metrics(std::ostream& out, const PrequentialResult& result, bool with_timing) {
  for (const auto& m : result.batches) out << metrics_record(m, with_timing) << '\n';
  out << summary_record(result.summary, with_timing) << '\n';
}

}  // namespace evonet

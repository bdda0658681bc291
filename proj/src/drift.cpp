#include "evonet/drift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evonet/errors.hpp"

namespace evonet {

std::string_view to_string(DriftState state) {
  switch (state) {
    case DriftState::stable: return "stable";
    case DriftState::warning: return "warning";
    case DriftState::drift: return "drift";
  }
  return "stable";
}

double hoeffding_bound(double count, double alpha, double range) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("significance level must lie in (0, 1)");
  if (!(count >= 1.0)) throw ParameterError("Hoeffding bound needs at least one observation");
  if (range < 0.0) throw ParameterError("value range must be non-negative");
  return range * std::sqrt(std::log(1.0 / alpha) / (2.0 * count));
}

void ErrorRecord::append(double value) {
  if (!std::isfinite(value)) throw NumericError("non-finite error entry");
  if (prefix_.empty()) prefix_.push_back(0.0);
  if (values_.empty()) {
    lo_ = hi_ = value;
  } else {
    lo_ = std::min(lo_, value);
    hi_ = std::max(hi_, value);
  }
  values_.push_back(value);
  prefix_.push_back(prefix_.back() + value);
}

void ErrorRecord::clear() {
  values_.clear();
  prefix_.clear();
  lo_ = hi_ = 0.0;
}

double ErrorRecord::prefix_mean(std::size_t cut) const {
  if (cut == 0 || cut > values_.size()) throw ContractError("prefix length out of range");
  return prefix_[cut] / static_cast<double>(cut);
}

double ErrorRecord::suffix_mean(std::size_t cut) const {
  if (cut >= values_.size()) throw ContractError("suffix is empty");
  return (prefix_.back() - prefix_[cut]) / static_cast<double>(values_.size() - cut);
}

double ErrorRecord::range() const {
  if (mode_ == Mode::classification) return 1.0;
  return std::max(hi_ - lo_, 1e-12);
}

DriftDetector::DriftDetector(Mode mode, DriftConfig config) : config_(config), record_(mode) {
  if (!(config_.alpha_drift > 0.0 && config_.alpha_drift < 1.0) ||
      !(config_.alpha_warning > 0.0 && config_.alpha_warning < 1.0))
    throw ParameterError("significance levels must lie in (0, 1)");
  if (!(config_.alpha_drift < config_.alpha_warning))
    throw ParameterError("alpha_drift must be smaller than alpha_warning");
  if (config_.min_window == 0) throw ParameterError("min_window must be positive");
}

std::optional<std::size_t> switching_point(const ErrorRecord& record, std::size_t min_window, double alpha) {
  const std::size_t n = record.size();
  const std::size_t w = min_window;
  if (w == 0 || n < 2 * w) return std::nullopt;
  const double range = record.range();
  std::size_t cut = w;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = w; c <= n - w; ++c) {
    const double upper = record.prefix_mean(c) + hoeffding_bound(static_cast<double>(c), alpha, range);
    if (upper <= best) {
      best = upper;
      cut = c;
    }
  }
  if (record.suffix_mean(cut) > record.prefix_mean(cut)) return cut;
  return std::nullopt;
}

std::optional<std::size_t> DriftDetector::find_switching_point() const {
  return switching_point(record_, config_.min_window, config_.alpha_drift);
}

DriftState DriftDetector::evaluate(std::span<const double> new_entries) {
  for (double v : new_entries) record_.append(v);

  DriftState verdict = DriftState::stable;
  if (const auto cut = find_switching_point()) {
    const double n = static_cast<double>(record_.size());
    const double c = static_cast<double>(*cut);
    // Two-sample effective size for comparing prefix [0, cut) with suffix [cut, n).
    const double effective = c * (n - c) / n;
    const double gap = record_.suffix_mean(*cut) - record_.prefix_mean(*cut);
    const double range = record_.range();
    if (gap >= hoeffding_bound(effective, config_.alpha_drift, range)) {
      verdict = DriftState::drift;
    } else if (gap >= hoeffding_bound(effective, config_.alpha_warning, range)) {
      verdict = DriftState::warning;
    }
  }

  switch (verdict) {
    case DriftState::drift:
      record_.clear();
      state_ = DriftState::stable;
      break;
    case DriftState::warning:
      state_ = DriftState::warning;
      break;
    case DriftState::stable:
      warning_buffer_.clear();
      state_ = DriftState::stable;
      break;
  }
  return verdict;
}

void DriftDetector::accumulate_warning(const StreamBatch& batch) {
  if (state_ != DriftState::warning)
    throw ContractError("warning buffer only accumulates during the warning phase");
  warning_buffer_.push_back(batch);
}

std::vector<StreamBatch> DriftDetector::take_warning_buffer() {
  std::vector<StreamBatch> out;
  out.swap(warning_buffer_);
  return out;
}

void DriftDetector::reset() {
  record_.clear();
  warning_buffer_.clear();
  state_ = DriftState::stable;
}

}  // namespace evonet

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "evonet/types.hpp"

namespace evonet {

enum class DriftState { stable, warning, drift };

std::string_view to_string(DriftState state);

/// Hoeffding radius for the mean of `count` variables bounded in a range of
/// width `range`: range * sqrt(ln(1/alpha) / (2 count)).
///
/// The bound as usually printed, (b-a) sqrt(size / (2 size cut) ln(1/alpha)),
/// reduces to this form. `count` may be fractional when an effective
/// two-sample size is passed.
double hoeffding_bound(double count, double alpha, double range);

/// Append-only error record with O(1) prefix means.
class ErrorRecord {
 public:
  explicit ErrorRecord(Mode mode = Mode::classification) : mode_(mode) {}

  void append(double value);
  void clear();

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::span<const double> values() const { return values_; }

  /// Mean of entries [0, cut).
  double prefix_mean(std::size_t cut) const;
  /// Mean of entries [cut, size).
  double suffix_mean(std::size_t cut) const;
  double mean() const { return prefix_mean(size()); }

  /// b - a: 1 for 0/1 flags, running max - min (floor 1e-12) otherwise.
  double range() const;
  Mode mode() const { return mode_; }

 private:
  Mode mode_;
  std::vector<double> values_;
  std::vector<double> prefix_;  // prefix_[k] = sum of first k entries
  double lo_ = 0.0;
  double hi_ = 0.0;
};

/// Prefix length in [min_window, size - min_window] minimising prefix mean
/// plus its Hoeffding radius at `alpha`, returned only when the suffix mean
/// exceeds the prefix mean there.
std::optional<std::size_t> switching_point(const ErrorRecord& record, std::size_t min_window, double alpha);

struct DriftConfig {
  double alpha_drift = 1e-4;
  double alpha_warning = 5e-4;
  /// Smallest admissible prefix or suffix; the scan needs 2 * min_window entries.
  std::size_t min_window = 1000;
};

/// Hoeffding-bound detector with an adaptive (switching-point) window.
///
/// The switching point is the prefix length minimising prefix mean plus its
/// Hoeffding radius. Drift is a significant increase of the suffix mean over
/// the prefix mean; decreases never signal.
class DriftDetector {
 public:
  explicit DriftDetector(Mode mode = Mode::classification, DriftConfig config = {});

  /// Candidate cut over [min_window, size - min_window], returned only when
  /// the suffix mean exceeds the prefix mean there.
  std::optional<std::size_t> find_switching_point() const;

  /// Appends entries and classifies the record. On drift the record is
  /// cleared and the detector returns to stable (the warning buffer is kept
  /// for take_warning_buffer). A stable verdict discards the warning buffer.
  DriftState evaluate(std::span<const double> new_entries);

  /// Buffers a batch seen during the warning phase.
  void accumulate_warning(const StreamBatch& batch);

  /// Moves the warning buffer out, leaving it empty.
  std::vector<StreamBatch> take_warning_buffer();

  const std::vector<StreamBatch>& warning_buffer() const { return warning_buffer_; }
  DriftState state() const { return state_; }
  const ErrorRecord& record() const { return record_; }
  const DriftConfig& config() const { return config_; }

  /// Clears record, buffer and state.
  void reset();

 private:
  DriftConfig config_;
  ErrorRecord record_;
  DriftState state_ = DriftState::stable;
  std::vector<StreamBatch> warning_buffer_;
};

}  // namespace evonet

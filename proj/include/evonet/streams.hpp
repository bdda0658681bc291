#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evonet/types.hpp"

namespace evonet {

/// SEA concepts: x ~ U[0,10]^3, class 1 iff x1 + x2 <= theta, with theta
/// switching abruptly every `samples_per_concept` samples.
struct SeaConfig {
  std::vector<double> concept_thresholds{8.0, 9.0, 7.0, 9.5};
  std::size_t samples_per_concept = 50000;
  double noise_rate = 0.1;
  std::size_t batch_size = 1000;
  std::uint64_t seed = 1;
};

/// y1 = sin(omega x1) + 0.5 x2 + noise (and y2 = cos(omega x1) + 0.5 x2 +
/// noise when two targets are requested), x ~ U[-1,1]^2, omega stepping per
/// concept.
struct RegressionStreamConfig {
  std::vector<double> omegas{1.0, 4.0, 2.0};
  std::size_t samples_per_concept = 10000;
  double noise_std = 0.05;
  std::size_t outputs = 1;
  std::size_t batch_size = 500;
  std::uint64_t seed = 1;
};

enum class Normalization { none, minmax, zscore };

Normalization parse_normalization(const std::string& text);

struct CsvStreamConfig {
  std::filesystem::path path;
  std::vector<std::string> target_columns;
  Normalization normalization = Normalization::none;
  std::size_t batch_size = 1000;
  Mode mode = Mode::classification;
  std::size_t num_classes = 0;  // 0: inferred as max label + 1
};

/// Concept boundaries of a generated stream, written next to CSV exports.
struct StreamMetadata {
  std::string kind;
  std::size_t samples = 0;
  std::size_t batch_size = 0;
  std::uint64_t seed = 0;
  struct Segment {
    std::size_t start;
    std::size_t end;
    double parameter;  // theta for SEA, omega for regression
  };
  std::vector<Segment> concepts;
};

std::vector<StreamBatch> generate_sea(const SeaConfig& config);
StreamMetadata sea_metadata(const SeaConfig& config);

std::vector<StreamBatch> generate_drifting_regression(const RegressionStreamConfig& config);
StreamMetadata regression_metadata(const RegressionStreamConfig& config);

/// Batches rows in file order; normalisation statistics come from the first
/// batch only.
std::vector<StreamBatch> ingest_csv(const CsvStreamConfig& config);

/// Rescales features in place with statistics of the first batch only.
void normalize_batches(std::vector<StreamBatch>& batches, Normalization method);

/// Same for regression targets.
void normalize_targets(std::vector<StreamBatch>& batches, Normalization method);

/// Writes a header row and one line per sample. Classification targets are
/// written as a single integer column (argmax of the one-hot row).
void write_csv(const std::filesystem::path& path, const std::vector<StreamBatch>& batches,
               Mode mode, const std::vector<std::string>& feature_names,
               const std::vector<std::string>& target_names);

void write_metadata(const std::filesystem::path& path, const StreamMetadata& meta);

/// Total number of rows over all batches.
std::size_t total_rows(const std::vector<StreamBatch>& batches);

}  // namespace evonet

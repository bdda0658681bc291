#include "evonet/streams.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <string_view>

#include <nlohmann/json.hpp>

#include "evonet/errors.hpp"

namespace evonet {

namespace {

using Rng64 = std::mt19937_64;

std::vector<StreamBatch> split_into_batches(const Matrix& X, const Matrix& Y,
                                            const std::vector<std::size_t>& task_of_row,
                                            std::size_t batch_size) {
  if (batch_size == 0) throw ParameterError("batch size must be positive");
  std::vector<StreamBatch> batches;
  const auto rows = static_cast<std::size_t>(X.rows());
  for (std::size_t start = 0, k = 0; start < rows; start += batch_size, ++k) {
    const std::size_t len = std::min(batch_size, rows - start);
    StreamBatch batch;
    batch.X = X.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
    batch.Y = Y.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
    batch.index = k;
    batch.task = task_of_row.empty() ? 0 : task_of_row[start];
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view field, double& value) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  return ec == std::errc() && ptr == end && std::isfinite(value);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Normalization parse_normalization(const std::string& text) {
  if (text == "none") return Normalization::none;
  if (text == "minmax") return Normalization::minmax;
  if (text == "zscore") return Normalization::zscore;
  throw ParameterError("unknown normalization '" + text + "'");
}

std::size_t total_rows(const std::vector<StreamBatch>& batches) {
  std::size_t total = 0;
  for (const auto& b : batches) total += b.rows();
  return total;
}

std::vector<StreamBatch> generate_sea(const SeaConfig& config) {
  if (config.concept_thresholds.empty()) throw ParameterError("SEA needs at least one threshold");
  if (!(config.noise_rate >= 0.0 && config.noise_rate < 0.5))
    throw ParameterError("SEA noise rate must lie in [0, 0.5)");
  if (config.samples_per_concept == 0) throw ParameterError("samples_per_concept must be positive");

  const std::size_t total = config.concept_thresholds.size() * config.samples_per_concept;
  Matrix X(total, 3);
  Matrix Y = Matrix::Zero(total, 2);
  std::vector<std::size_t> task(total);
  Rng64 rng(config.seed);
  std::uniform_real_distribution<double> feature(0.0, 10.0);
  std::bernoulli_distribution flip(config.noise_rate);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t concept_id = i / config.samples_per_concept;
    const double theta = config.concept_thresholds[concept_id];
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < 3; ++j) X(r, j) = feature(rng);
    int label = X(r, 0) + X(r, 1) <= theta ? 1 : 0;
    if (flip(rng)) label = 1 - label;
    Y(r, label) = 1.0;
    task[i] = concept_id;
  }
  return split_into_batches(X, Y, task, config.batch_size);
}

StreamMetadata sea_metadata(const SeaConfig& config) {
  StreamMetadata meta;
  meta.kind = "sea";
  meta.samples = config.concept_thresholds.size() * config.samples_per_concept;
  meta.batch_size = config.batch_size;
  meta.seed = config.seed;
  for (std::size_t c = 0; c < config.concept_thresholds.size(); ++c)
    meta.concepts.push_back({c * config.samples_per_concept, (c + 1) * config.samples_per_concept,
                             config.concept_thresholds[c]});
  return meta;
}

std::vector<StreamBatch> generate_drifting_regression(const RegressionStreamConfig& config) {
  if (config.omegas.empty()) throw ParameterError("regression stream needs at least one concept");
  if (config.outputs < 1 || config.outputs > 2) throw ParameterError("regression stream supports 1 or 2 targets");
  if (config.noise_std < 0.0) throw ParameterError("noise_std must be non-negative");
  if (config.samples_per_concept == 0) throw ParameterError("samples_per_concept must be positive");

  const std::size_t total = config.omegas.size() * config.samples_per_concept;
  const auto m = static_cast<Eigen::Index>(config.outputs);
  Matrix X(total, 2);
  Matrix Y(total, m);
  std::vector<std::size_t> task(total);
  Rng64 rng(config.seed);
  std::uniform_real_distribution<double> feature(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t concept_id = i / config.samples_per_concept;
    const double omega = config.omegas[concept_id];
    const auto r = static_cast<Eigen::Index>(i);
    X(r, 0) = feature(rng);
    X(r, 1) = feature(rng);
    const double e1 = config.noise_std > 0.0 ? config.noise_std * noise(rng) : 0.0;
    Y(r, 0) = std::sin(omega * X(r, 0)) + 0.5 * X(r, 1) + e1;
    if (m == 2) {
      const double e2 = config.noise_std > 0.0 ? config.noise_std * noise(rng) : 0.0;
      Y(r, 1) = std::cos(omega * X(r, 0)) + 0.5 * X(r, 1) + e2;
    }
    task[i] = concept_id;
  }
  return split_into_batches(X, Y, task, config.batch_size);
}

StreamMetadata regression_metadata(const RegressionStreamConfig& config) {
  StreamMetadata meta;
  meta.kind = "regression";
  meta.samples = config.omegas.size() * config.samples_per_concept;
  meta.batch_size = config.batch_size;
  meta.seed = config.seed;
  for (std::size_t c = 0; c < config.omegas.size(); ++c)
    meta.concepts.push_back({c * config.samples_per_concept, (c + 1) * config.samples_per_concept,
                             config.omegas[c]});
  return meta;
}

std::vector<StreamBatch> ingest_csv(const CsvStreamConfig& config) {
  std::ifstream in(config.path);
  if (!in) throw DataError("cannot open " + config.path.string());
  if (config.target_columns.empty()) throw ParameterError("at least one target column is required");
  if (config.mode == Mode::classification && config.target_columns.size() != 1)
    throw ParameterError("classification expects exactly one label column");

  std::string line;
  if (!std::getline(in, line)) throw DataError(config.path.string() + ": missing header row");
  const auto header = split_commas(line);
  std::vector<std::size_t> target_idx;
  for (const auto& name : config.target_columns) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("target column '" + name + "' not found in header");
    target_idx.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  std::vector<std::size_t> feature_idx;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (std::find(target_idx.begin(), target_idx.end(), j) == target_idx.end()) feature_idx.push_back(j);
  if (feature_idx.empty()) throw DataError("no feature columns left after removing targets");

  std::vector<std::vector<double>> features;
  std::vector<std::vector<double>> targets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    std::vector<double> row(feature_idx.size());
    for (std::size_t j = 0; j < feature_idx.size(); ++j)
      if (!parse_double(fields[feature_idx[j]], row[j]))
        throw DataError("line " + std::to_string(line_no) + ": unparseable value '" +
                        std::string(fields[feature_idx[j]]) + "'");
    std::vector<double> target(target_idx.size());
    for (std::size_t j = 0; j < target_idx.size(); ++j)
      if (!parse_double(fields[target_idx[j]], target[j]))
        throw DataError("line " + std::to_string(line_no) + ": non-numeric target '" +
                        std::string(fields[target_idx[j]]) + "'");
    if (config.mode == Mode::classification &&
        (target[0] < 0.0 || target[0] != std::floor(target[0])))
      throw DataError("line " + std::to_string(line_no) + ": class label must be a non-negative integer");
    features.push_back(std::move(row));
    targets.push_back(std::move(target));
  }
  if (features.empty()) throw DataError(config.path.string() + ": no data rows");

  const auto rows = static_cast<Eigen::Index>(features.size());
  const auto n = static_cast<Eigen::Index>(feature_idx.size());
  Matrix X(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index j = 0; j < n; ++j) X(r, j) = features[r][j];

  Matrix Y;
  if (config.mode == Mode::classification) {
    std::size_t classes = config.num_classes;
    if (classes == 0) {
      double top = 0.0;
      for (const auto& t : targets) top = std::max(top, t[0]);
      classes = std::max<std::size_t>(2, static_cast<std::size_t>(top) + 1);
    }
    Y = Matrix::Zero(rows, static_cast<Eigen::Index>(classes));
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto label = static_cast<std::size_t>(targets[r][0]);
      if (label >= classes)
        throw DataError("class label " + std::to_string(label) + " exceeds configured class count");
      Y(r, static_cast<Eigen::Index>(label)) = 1.0;
    }
  } else {
    Y.resize(rows, static_cast<Eigen::Index>(target_idx.size()));
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index j = 0; j < Y.cols(); ++j) Y(r, j) = targets[r][j];
  }

  auto batches = split_into_batches(X, Y, {}, config.batch_size);
  normalize_batches(batches, config.normalization);
  return batches;
}

namespace {

void rescale_columns(std::vector<StreamBatch>& batches, Normalization method, Matrix StreamBatch::*field) {
  if (method == Normalization::none || batches.empty()) return;
  const Matrix& head = batches.front().*field;
  const Eigen::Index n = head.cols();
  RowVector shift(n), scale(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (method == Normalization::minmax) {
      shift(j) = head.col(j).minCoeff();
      scale(j) = head.col(j).maxCoeff() - shift(j);
    } else {
      shift(j) = head.col(j).mean();
      scale(j) = std::sqrt((head.col(j).array() - shift(j)).square().mean());
    }
    scale(j) = std::max(scale(j), 1e-12);
  }
  for (auto& b : batches) {
    Matrix& m = b.*field;
    m = ((m.rowwise() - shift).array().rowwise() / scale.array()).matrix();
  }
}

}  // namespace

void normalize_batches(std::vector<StreamBatch>& batches, Normalization method) {
  rescale_columns(batches, method, &StreamBatch::X);
}

void normalize_targets(std::vector<StreamBatch>& batches, Normalization method) {
  rescale_columns(batches, method, &StreamBatch::Y);
}

void write_csv(const std::filesystem::path& path, const std::vector<StreamBatch>& batches, Mode mode,
               const std::vector<std::string>& feature_names,
               const std::vector<std::string>& target_names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  std::string header;
  for (const auto& name : feature_names) header += (header.empty() ? "" : ",") + name;
  for (const auto& name : target_names) header += "," + name;
  out << header << '\n';
  std::string row;
  for (const auto& batch : batches) {
    if (static_cast<std::size_t>(batch.X.cols()) != feature_names.size())
      throw ShapeError("feature names do not match batch width");
    for (Eigen::Index r = 0; r < batch.X.rows(); ++r) {
      row.clear();
      for (Eigen::Index j = 0; j < batch.X.cols(); ++j) {
        if (j > 0) row += ',';
        row += format_double(batch.X(r, j));
      }
      if (mode == Mode::classification) {
        Eigen::Index label = 0;
        batch.Y.row(r).maxCoeff(&label);
        row += ',' + std::to_string(label);
      } else {
        for (Eigen::Index j = 0; j < batch.Y.cols(); ++j) row += ',' + format_double(batch.Y(r, j));
      }
      out << row << '\n';
    }
  }
  if (!out) throw DataError("failed while writing " + path.string());
}

void write_metadata(const std::filesystem::path& path, const StreamMetadata& meta) {
  nlohmann::json doc;
  doc["kind"] = meta.kind;
  doc["samples"] = meta.samples;
  doc["batch_size"] = meta.batch_size;
  doc["seed"] = meta.seed;
  doc["concepts"] = nlohmann::json::array();
  doc["drift_points"] = nlohmann::json::array();
  for (const auto& seg : meta.concepts) {
    doc["concepts"].push_back({{"start", seg.start}, {"end", seg.end}, {"parameter", seg.parameter}});
    if (seg.start > 0) doc["drift_points"].push_back(seg.start);
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace evonet

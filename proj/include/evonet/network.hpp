#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "evonet/types.hpp"

namespace evonet {

using Rng = std::mt19937_64;

/// Sigmoid layer; W is in x width so activations are s(x W + b).
struct HiddenLayer {
  Matrix W;
  Vector b;
  double eta = 0.01;

  std::size_t input_width() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(W.cols()); }
};

/// Linear head (softmax applied on top in classification mode).
struct OutputLayer {
  Matrix W;  // R_D x m
  Vector c;
  double eta = 0.01;
};

struct ForwardTrace {
  std::vector<Matrix> hidden;  // one batch x R_d matrix per layer
  Matrix output;               // batch x m
};

/// Per-parameter gradient with the same layout as the network.
struct Gradient {
  std::vector<Matrix> dW;
  std::vector<Vector> db;
  Matrix dW_out;
  Vector dc_out;
};

double sigmoid(double a);

/// Row-wise, max-subtracted softmax.
void softmax_inplace(Eigen::Ref<RowVector, 0, Eigen::InnerStride<>> row);

/// y1 / (y1 + y2) for the two largest entries of a probability row.
double top_two_ratio(std::span<const double> row);

/// Feed-forward network whose width and depth change at run time.
///
/// All mutation happens through the member functions below. Instances carry
/// no random state; operations that draw parameters take the caller's Rng.
class EvolvingNetwork {
 public:
  /// Scratch start: one hidden layer of `initial_width` units, Xavier-uniform
  /// weights, zero biases.
  EvolvingNetwork(std::size_t input_dim, std::size_t output_dim, Mode mode, Rng& rng,
                  std::size_t initial_width = 1, double base_rate = 0.01);

  /// Builds from explicit parameters (used by snapshots and tests).
  EvolvingNetwork(Mode mode, std::vector<HiddenLayer> layers, OutputLayer head);

  Mode mode() const { return mode_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  std::size_t depth() const { return layers_.size(); }
  std::size_t top_width() const { return layers_.back().width(); }
  std::vector<std::size_t> widths() const;
  std::size_t total_units() const;
  std::size_t parameter_count() const;

  const std::vector<HiddenLayer>& layers() const { return layers_; }
  std::vector<HiddenLayer>& layers() { return layers_; }
  const OutputLayer& head() const { return head_; }
  OutputLayer& head() { return head_; }

  ForwardTrace forward(const Matrix& X) const;

  /// Output row for a single sample (probabilities in classification mode).
  RowVector predict(const Eigen::Ref<const RowVector>& x) const;

  /// Applies the head (and softmax, in classification mode) to top-layer
  /// activations.
  RowVector apply_head(const Eigen::Ref<const RowVector>& top) const;

  /// Per-sample training objective: cross-entropy, or half the summed
  /// squared error for the linear head.
  double sample_objective(const Eigen::Ref<const RowVector>& x,
                          const Eigen::Ref<const RowVector>& y) const;

  Gradient gradient(const Eigen::Ref<const RowVector>& x,
                    const Eigen::Ref<const RowVector>& y) const;

  /// One SGD pass in arrival order, layer d updated with rates[d] and the head
  /// with rates[depth()]. Returns the mean pre-update loss (cross-entropy or
  /// MSE over outputs).
  double train_step(const Matrix& X, const Matrix& Y, std::span<const double> rates);

  /// Single-sample SGD update; returns the pre-update loss of that sample.
  double train_sample(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y,
                      std::span<const double> rates);

  /// Appends a unit to the top hidden layer. Its outgoing head row is -error,
  /// incoming weights ~ U[-0.05, 0.05], bias ~ U[-1, 1].
  void add_hidden_unit(std::span<const double> error, Rng& rng);

  /// Removes top-layer unit `index` (0-based). Returns false and leaves the
  /// network untouched when only one unit remains.
  bool remove_hidden_unit(std::size_t index);

  /// Inserts a fresh top hidden layer and a fresh head.
  void add_hidden_layer(std::size_t init_width, Rng& rng, double eta);

  /// Per-layer learning rates followed by the head rate.
  std::vector<double> rates() const;
  void set_rates(std::span<const double> rates);

  /// y1 / (y1 + y2) on an output row. Classification only.
  double confidence_ratio(std::span<const double> output_row) const;

  bool all_finite() const;

 private:
  void check_input(const Matrix& X) const;

  Mode mode_;
  std::size_t input_dim_;
  std::size_t output_dim_;
  std::vector<HiddenLayer> layers_;
  OutputLayer head_;
};

/// U[-r, r] with r = gain * sqrt(6 / (fan_in + fan_out)).
Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain = 1.0);

/// Glorot gain for logistic units.
inline constexpr double kSigmoidGain = 4.0;

}  // namespace evonet

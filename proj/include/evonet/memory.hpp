#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "evonet/types.hpp"

namespace evonet {

/// chi^2_p quantiles at 0.99 and 0.999: the lower and upper edges of the
/// admission band on the squared Mahalanobis distance.
std::pair<double, double> chi_square_thresholds(std::size_t dof);

/// Quantile of the chi-square distribution with `dof` degrees of freedom.
double chi_square_quantile(std::size_t dof, double probability);

/// (x - center)^T inv_cov (x - center), clamped at zero.
double mahalanobis_sq(const Vector& center, const Matrix& inv_cov, const Eigen::Ref<const RowVector>& x);

struct MemoryConfig {
  Mode mode = Mode::classification;
  double delta = 0.55;     // confidence threshold for hard examples
  double lambda = 1e-2;    // seed covariance is lambda * I
  std::size_t cap = 0;     // 0 = unlimited, otherwise FIFO eviction
};

struct MemorySample {
  RowVector x;
  RowVector y;
};

/// Replay memory fed by an ellipsoidal (Mahalanobis annulus) selector and a
/// softmax-confidence selector.
///
/// The centre and inverse covariance are maintained recursively: a Welford
/// mean plus a Sherman-Morrison rank-one update of the inverse scatter
/// matrix, so no per-sample inversion is performed. Until n + 1 samples have
/// been seen the inverse covariance is (1/lambda) I.
class AdaptiveMemory {
 public:
  AdaptiveMemory(std::size_t input_dim, std::size_t output_dim, MemoryConfig config = {});

  void update_stats(const Eigen::Ref<const RowVector>& x);

  /// True once count >= n + 1.
  bool ready() const { return count_ >= dim_ + 1; }

  double mahalanobis_sq(const Eigen::Ref<const RowVector>& x) const;

  /// Admits (x, y) when the squared distance lies in [t1, t2], or (in
  /// classification, given an output row) when the top-two ratio is below
  /// delta.
  bool consider_sample(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y,
                       std::optional<std::span<const double>> output_row = std::nullopt);

  /// Stored samples followed by all warning-buffer rows, in arrival order.
  /// The memory itself is left intact.
  StreamBatch replay_set(std::span<const StreamBatch> warning_buffer) const;

  const Vector& center() const { return center_; }
  /// Inverse of the (population) covariance estimate.
  Matrix inverse_covariance() const;
  std::size_t count() const { return count_; }
  std::size_t size() const { return stored_.size(); }
  const std::deque<MemorySample>& stored() const { return stored_; }
  double lower_threshold() const { return t1_; }
  double upper_threshold() const { return t2_; }
  const MemoryConfig& config() const { return config_; }
  std::size_t reseeds() const { return reseeds_; }

 private:
  void store(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y);
  void reseed_from_scatter();

  std::size_t dim_;
  std::size_t output_dim_;
  MemoryConfig config_;
  double t1_;
  double t2_;
  std::size_t count_ = 0;
  Vector center_;
  Matrix scatter_;       // sum of centred outer products
  Matrix inv_scatter_;   // valid once ready()
  std::deque<MemorySample> stored_;
  std::size_t reseeds_ = 0;
};

}  // namespace evonet

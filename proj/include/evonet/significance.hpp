#pragma once

#include <cstddef>
#include <vector>

#include "evonet/network.hpp"

namespace evonet {

/// Per-feature running mean and (population) variance, Welford one-pass.
class InputStatistics {
 public:
  explicit InputStatistics(std::size_t dim = 0);

  void update(const Eigen::Ref<const RowVector>& x);
  void reset();

  const Vector& mean() const { return mean_; }
  Vector variance() const;
  std::size_t count() const { return count_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }

 private:
  Vector mean_;
  Vector m2_;
  std::size_t count_ = 0;
};

/// True when current_mean + current_std > min_mean + factor * min_std.
///
/// The comparison is strict: a perfectly constant monitored signal has zero
/// spread and must never trigger.
bool spc_rule_fires(double current_mean, double current_std, double min_mean, double min_std,
                    double factor);

/// Confidence factor for the growth rule, 1.25 exp(-bias2) + 0.75.
double growth_factor(double bias2);

/// Confidence factor for the pruning rule, 1.25 exp(-var^2) + 0.75 (the rule
/// itself uses twice this value).
double pruning_factor(double variance);

/// Running mean/std of a monitored scalar plus the minimum-tracking pair
/// used by the k-sigma rules.
class SpcAccumulator {
 public:
  explicit SpcAccumulator(std::size_t warmup = 10) : warmup_(warmup) {}

  /// Folds `value` into the running stats and lowers the minimum pair when
  /// mean + std drops strictly below it.
  void observe(double value);

  /// Evaluates the k-sigma rule with `factor`. On firing, the minimum pair is
  /// re-seeded from the current stats and the warm-up restarts.
  bool check(double factor);

  /// Drops all history.
  void reset();

  double mean() const { return mean_; }
  double stddev() const;
  double mean_min() const { return mean_min_; }
  double std_min() const { return std_min_; }
  std::size_t count() const { return count_; }
  std::size_t since_reset() const { return since_reset_; }
  std::size_t warmup() const { return warmup_; }

 private:
  std::size_t warmup_;
  std::size_t count_ = 0;
  std::size_t since_reset_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double mean_min_ = 0.0;
  double std_min_ = 0.0;
};

/// Expected activations and their variances, layer by layer, for inputs
/// x ~ N(mu, diag(sigma2)).
///
/// A sigmoid of a Gaussian pre-activation a ~ N(m, v) is approximated with
/// the probit identity E[s(a)] ~= s(kappa m), kappa = (1 + pi v / 8)^-1/2,
/// and Var[s(a)] ~= s(kappa m)(1 - s(kappa m))(1 - kappa), which follows from
/// E[s^2] = E[s] - E[s'] under the same approximation. Units are treated as
/// independent when the moments are chained into the next layer.
struct ActivationMoments {
  std::vector<Vector> mean;
  std::vector<Vector> variance;
};

ActivationMoments propagate_moments(const EvolvingNetwork& net, const Vector& mu,
                                    const Vector& sigma2);

/// E[y~]: head applied to the expected top activations (softmax in
/// classification mode).
Vector expected_output(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2);

/// Squared distance between E[y~] and `y`, averaged over output dims.
double network_bias_squared(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2,
                            const Vector& y);

/// Variance of the head's linear output, averaged over output dims, >= 0.
double network_variance(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2);

/// Expected activation of each top-layer unit scaled by the norm of its
/// outgoing head row.
Vector unit_contributions(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2);

/// Lowest-index argmin.
std::size_t weakest_unit(const Vector& contributions);

enum class GrowDecision { hold, grow };
enum class PruneDecision { hold, prune };

struct SignificanceState {
  explicit SignificanceState(std::size_t input_dim = 0, std::size_t warmup = 10)
      : input_stats(input_dim), bias_spc(warmup), var_spc(warmup) {}

  InputStatistics input_stats;
  SpcAccumulator bias_spc;
  SpcAccumulator var_spc;
  bool grown_flag = false;  // pruning cool-down for the rest of the batch

  /// Fresh monitors for a newly inserted top layer; input stats are kept.
  void reset_monitors();
};

GrowDecision update_and_check_grow(SignificanceState& state, double bias2);
PruneDecision update_and_check_prune(SignificanceState& state, double variance);

}  // namespace evonet

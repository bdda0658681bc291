#include "evonet/significance.hpp"

#include <cmath>
#include <numbers>

#include "evonet/errors.hpp"

namespace evonet {

InputStatistics::InputStatistics(std::size_t dim)
    : mean_(Vector::Zero(static_cast<Eigen::Index>(dim))),
      m2_(Vector::Zero(static_cast<Eigen::Index>(dim))) {}

void InputStatistics::update(const Eigen::Ref<const RowVector>& x) {
  if (x.size() != mean_.size()) throw ShapeError("input statistics: dimension mismatch");
  ++count_;
  const Vector delta = x.transpose() - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_.array() += delta.array() * (x.transpose() - mean_).array();
}

void InputStatistics::reset() {
  mean_.setZero();
  m2_.setZero();
  count_ = 0;
}

Vector InputStatistics::variance() const {
  if (count_ == 0) return Vector::Zero(mean_.size());
  return (m2_ / static_cast<double>(count_)).cwiseMax(0.0);
}

bool spc_rule_fires(double current_mean, double current_std, double min_mean, double min_std,
                    double factor) {
  return current_mean + current_std > min_mean + factor * min_std;
}

double growth_factor(double bias2) { return 1.25 * std::exp(-bias2) + 0.75; }

double pruning_factor(double variance) { return 1.25 * std::exp(-variance * variance) + 0.75; }

void SpcAccumulator::observe(double value) {
  ++count_;
  ++since_reset_;
  const double delta = value - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (value - mean_);
  const double sd = stddev();
  if (count_ == 1 || mean_ + sd < mean_min_ + std_min_) {
    mean_min_ = mean_;
    std_min_ = sd;
  }
}

bool SpcAccumulator::check(double factor) {
  if (since_reset_ < warmup_) return false;
  const double sd = stddev();
  if (!spc_rule_fires(mean_, sd, mean_min_, std_min_, factor)) return false;
  mean_min_ = mean_;
  std_min_ = sd;
  since_reset_ = 0;
  return true;
}

void SpcAccumulator::reset() {
  count_ = 0;
  since_reset_ = 0;
  mean_ = m2_ = 0.0;
  mean_min_ = std_min_ = 0.0;
}

double SpcAccumulator::stddev() const {
  if (count_ < 2) return 0.0;
  return std::sqrt(std::max(0.0, m2_ / static_cast<double>(count_)));
}

namespace {

constexpr double kProbitScale = std::numbers::pi / 8.0;

void check_moments_input(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2) {
  if (static_cast<std::size_t>(mu.size()) != net.input_dim() || sigma2.size() != mu.size())
    throw ShapeError("input moments must have length n");
}

}  // namespace

ActivationMoments propagate_moments(const EvolvingNetwork& net, const Vector& mu,
                                    const Vector& sigma2) {
  check_moments_input(net, mu, sigma2);
  ActivationMoments out;
  out.mean.reserve(net.depth());
  out.variance.reserve(net.depth());
  Vector in_mean = mu;
  Vector in_var = sigma2.cwiseMax(0.0);
  for (const auto& layer : net.layers()) {
    // Same row-vector product as the plain forward pass, so sigma2 = 0 reproduces it exactly.
    const RowVector pre_row = in_mean.transpose() * layer.W + layer.b.transpose();
    const Vector pre_mean = pre_row.transpose();
    const Vector pre_var = layer.W.array().square().matrix().transpose() * in_var;
    Vector act_mean(pre_mean.size());
    Vector act_var(pre_mean.size());
    for (Eigen::Index j = 0; j < pre_mean.size(); ++j) {
      const double kappa = 1.0 / std::sqrt(1.0 + kProbitScale * pre_var(j));
      const double s = sigmoid(kappa * pre_mean(j));
      act_mean(j) = s;
      act_var(j) = s * (1.0 - s) * (1.0 - kappa);
    }
    out.mean.push_back(act_mean);
    out.variance.push_back(act_var);
    in_mean = std::move(act_mean);
    in_var = std::move(act_var);
  }
  return out;
}

Vector expected_output(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2) {
  const ActivationMoments moments = propagate_moments(net, mu, sigma2);
  return net.apply_head(moments.mean.back().transpose()).transpose();
}

double network_bias_squared(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2,
                            const Vector& y) {
  if (static_cast<std::size_t>(y.size()) != net.output_dim()) throw ShapeError("target length mismatch");
  const Vector expected = expected_output(net, mu, sigma2);
  return (expected - y).squaredNorm() / static_cast<double>(y.size());
}

double network_variance(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2) {
  const ActivationMoments moments = propagate_moments(net, mu, sigma2);
  const Vector per_output =
      net.head().W.array().square().matrix().transpose() * moments.variance.back();
  return std::max(0.0, per_output.mean());
}

Vector unit_contributions(const EvolvingNetwork& net, const Vector& mu, const Vector& sigma2) {
  const Vector expected = propagate_moments(net, mu, sigma2).mean.back();
  return expected.cwiseProduct(net.head().W.rowwise().norm());
}

std::size_t weakest_unit(const Vector& contributions) {
  if (contributions.size() == 0) throw ShapeError("no units to rank");
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < contributions.size(); ++j)
    if (contributions(j) < contributions(best)) best = j;
  return static_cast<std::size_t>(best);
}

void SignificanceState::reset_monitors() {
  bias_spc.reset();
  var_spc.reset();
  grown_flag = false;
}

GrowDecision update_and_check_grow(SignificanceState& state, double bias2) {
  state.bias_spc.observe(bias2);
  if (state.bias_spc.check(growth_factor(bias2))) {
    state.grown_flag = true;
    return GrowDecision::grow;
  }
  return GrowDecision::hold;
}

PruneDecision update_and_check_prune(SignificanceState& state, double variance) {
  state.var_spc.observe(variance);
  if (state.grown_flag) return PruneDecision::hold;
  return state.var_spc.check(2.0 * pruning_factor(variance)) ? PruneDecision::prune
                                                             : PruneDecision::hold;
}

}  // namespace evonet

#include "evonet/memory.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "evonet/errors.hpp"
#include "evonet/network.hpp"

namespace evonet {

double chi_square_quantile(std::size_t dof, double probability) {
  if (dof == 0) throw ParameterError("chi-square needs at least one degree of freedom");
  if (!(probability > 0.0 && probability < 1.0)) throw ParameterError("probability must lie in (0, 1)");
  const boost::math::chi_squared_distribution<double> dist(static_cast<double>(dof));
  return boost::math::quantile(dist, probability);
}

std::pair<double, double> chi_square_thresholds(std::size_t dof) {
  return {chi_square_quantile(dof, 0.99), chi_square_quantile(dof, 0.999)};
}

double mahalanobis_sq(const Vector& center, const Matrix& inv_cov, const Eigen::Ref<const RowVector>& x) {
  if (x.size() != center.size() || inv_cov.rows() != center.size() || inv_cov.cols() != center.size())
    throw ShapeError("mahalanobis: dimension mismatch");
  const Vector d = x.transpose() - center;
  return std::max(0.0, d.dot(inv_cov * d));
}

AdaptiveMemory::AdaptiveMemory(std::size_t input_dim, std::size_t output_dim, MemoryConfig config)
    : dim_(input_dim),
      output_dim_(output_dim),
      config_(config),
      center_(Vector::Zero(static_cast<Eigen::Index>(input_dim))),
      scatter_(Matrix::Zero(static_cast<Eigen::Index>(input_dim), static_cast<Eigen::Index>(input_dim))),
      inv_scatter_(Matrix::Zero(static_cast<Eigen::Index>(input_dim), static_cast<Eigen::Index>(input_dim))) {
  if (input_dim == 0 || output_dim == 0) throw ShapeError("memory dimensions must be positive");
  if (!(config_.lambda > 0.0)) throw ParameterError("lambda must be positive");
  if (!(config_.delta > 0.0 && config_.delta <= 1.0)) throw ParameterError("delta must lie in (0, 1]");
  std::tie(t1_, t2_) = chi_square_thresholds(input_dim);
}

void AdaptiveMemory::reseed_from_scatter() {
  const auto n = static_cast<Eigen::Index>(dim_);
  const Matrix regularised =
      scatter_ + config_.lambda * static_cast<double>(count_) * Matrix::Identity(n, n);
  inv_scatter_ = regularised.ldlt().solve(Matrix::Identity(n, n));
  ++reseeds_;
}

void AdaptiveMemory::update_stats(const Eigen::Ref<const RowVector>& x) {
  if (static_cast<std::size_t>(x.size()) != dim_) throw ShapeError("memory: input length mismatch");
  ++count_;
  const Vector d = x.transpose() - center_;
  center_ += d / static_cast<double>(count_);
  if (count_ < 2) return;
  const double weight = static_cast<double>(count_ - 1) / static_cast<double>(count_);
  scatter_.noalias() += weight * d * d.transpose();

  if (count_ == dim_ + 1) {
    Eigen::FullPivLU<Matrix> lu(scatter_);
    if (lu.isInvertible() && lu.rcond() > 1e-12) {
      inv_scatter_ = lu.inverse();
    } else {
      reseed_from_scatter();
    }
    inv_scatter_ = 0.5 * (inv_scatter_ + inv_scatter_.transpose());
    return;
  }
  if (count_ <= dim_ + 1) return;

  // (S + w d d^T)^-1 = S^-1 - w S^-1 d d^T S^-1 / (1 + w d^T S^-1 d)
  const Vector pd = inv_scatter_ * d;
  const double denom = 1.0 + weight * d.dot(pd);
  if (!std::isfinite(denom) || denom < 1e-12) {
    reseed_from_scatter();
    return;
  }
  inv_scatter_.noalias() -= (weight / denom) * pd * pd.transpose();
  inv_scatter_ = 0.5 * (inv_scatter_ + inv_scatter_.transpose());
}

Matrix AdaptiveMemory::inverse_covariance() const {
  const auto n = static_cast<Eigen::Index>(dim_);
  if (!ready()) return Matrix::Identity(n, n) / config_.lambda;
  return static_cast<double>(count_) * inv_scatter_;
}

double AdaptiveMemory::mahalanobis_sq(const Eigen::Ref<const RowVector>& x) const {
  if (!ready()) throw ContractError("memory statistics need n + 1 samples before distances are defined");
  if (static_cast<std::size_t>(x.size()) != dim_) throw ShapeError("memory: input length mismatch");
  const Vector d = x.transpose() - center_;
  return std::max(0.0, static_cast<double>(count_) * d.dot(inv_scatter_ * d));
}

bool AdaptiveMemory::consider_sample(const Eigen::Ref<const RowVector>& x,
                                     const Eigen::Ref<const RowVector>& y,
                                     std::optional<std::span<const double>> output_row) {
  if (static_cast<std::size_t>(y.size()) != output_dim_) throw ShapeError("memory: target length mismatch");
  bool admit = false;
  if (ready()) {
    const double m2 = mahalanobis_sq(x);
    admit = m2 >= t1_ && m2 <= t2_;
  }
  if (!admit && config_.mode == Mode::classification && output_row)
    admit = top_two_ratio(*output_row) < config_.delta;
  if (admit) store(x, y);
  return admit;
}

void AdaptiveMemory::store(const Eigen::Ref<const RowVector>& x, const Eigen::Ref<const RowVector>& y) {
  stored_.push_back(MemorySample{x, y});
  if (config_.cap > 0 && stored_.size() > config_.cap) stored_.pop_front();
}

StreamBatch AdaptiveMemory::replay_set(std::span<const StreamBatch> warning_buffer) const {
  Eigen::Index rows = static_cast<Eigen::Index>(stored_.size());
  for (const auto& batch : warning_buffer) {
    if (static_cast<std::size_t>(batch.X.cols()) != dim_ ||
        static_cast<std::size_t>(batch.Y.cols()) != output_dim_)
      throw ShapeError("warning batch does not match memory dimensions");
    rows += batch.X.rows();
  }
  StreamBatch out;
  out.X.resize(rows, static_cast<Eigen::Index>(dim_));
  out.Y.resize(rows, static_cast<Eigen::Index>(output_dim_));
  Eigen::Index r = 0;
  for (const auto& sample : stored_) {
    out.X.row(r) = sample.x;
    out.Y.row(r) = sample.y;
    ++r;
  }
  for (const auto& batch : warning_buffer) {
    out.X.middleRows(r, batch.X.rows()) = batch.X;
    out.Y.middleRows(r, batch.Y.rows()) = batch.Y;
    r += batch.X.rows();
  }
  return out;
}

}  // namespace evonet

#pragma once

#include <span>
#include <vector>

#include "evonet/network.hpp"

namespace evonet {

/// Pearson correlation of two equally long columns; 0 when either is constant.
double pearson(std::span<const double> h, std::span<const double> y);
double pearson(const Eigen::Ref<const Vector>& h, const Eigen::Ref<const Vector>& y);

/// Per hidden layer: mean |corr| over all (unit, target column) pairs.
std::vector<double> layer_scores(const ForwardTrace& trace, const Matrix& Y);

/// 0.01 exp(1 - 1/rs) per layer, 0 for rs = 0. Bounded in [0, 0.01].
std::vector<double> learning_rates(std::span<const double> rs, double max_rate = 0.01);

}  // namespace evonet

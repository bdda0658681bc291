#include "evonet/relevance.hpp"

#include <algorithm>
#include <cmath>

#include "evonet/errors.hpp"

namespace evonet {

double pearson(const Eigen::Ref<const Vector>& h, const Eigen::Ref<const Vector>& y) {
  if (h.size() != y.size()) throw ShapeError("pearson: columns differ in length");
  if (h.size() < 2) throw ContractError("pearson needs at least two observations");
  const double n = static_cast<double>(h.size());
  const Eigen::ArrayXd hc = h.array() - h.sum() / n;
  const Eigen::ArrayXd yc = y.array() - y.sum() / n;
  const double shh = hc.square().sum();
  const double syy = yc.square().sum();
  // Relative floor: columns equal up to rounding count as constant.
  const double hscale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const double yscale = std::max(1.0, y.cwiseAbs().maxCoeff());
  if (shh <= 1e-24 * n * hscale * hscale || syy <= 1e-24 * n * yscale * yscale) return 0.0;
  const double r = (hc * yc).sum() / std::sqrt(shh * syy);
  return std::clamp(r, -1.0, 1.0);
}

double pearson(std::span<const double> h, std::span<const double> y) {
  return pearson(Eigen::Map<const Vector>(h.data(), static_cast<Eigen::Index>(h.size())),
                 Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size())));
}

std::vector<double> layer_scores(const ForwardTrace& trace, const Matrix& Y) {
  std::vector<double> scores;
  scores.reserve(trace.hidden.size());
  for (const Matrix& H : trace.hidden) {
    if (H.rows() != Y.rows()) throw ShapeError("activations and targets differ in row count");
    double total = 0.0;
    for (Eigen::Index j = 0; j < H.cols(); ++j)
      for (Eigen::Index o = 0; o < Y.cols(); ++o) total += std::abs(pearson(H.col(j), Y.col(o)));
    const double pairs = static_cast<double>(H.cols() * Y.cols());
    scores.push_back(pairs > 0 ? total / pairs : 0.0);
  }
  return scores;
}

std::vector<double> learning_rates(std::span<const double> rs, double max_rate) {
  std::vector<double> rates;
  rates.reserve(rs.size());
  for (double score : rs) {
    if (!(score >= 0.0 && score <= 1.0 + 1e-12)) throw ParameterError("relevance score outside [0, 1]");
    rates.push_back(score > 0.0 ? max_rate * std::exp(1.0 - 1.0 / std::min(score, 1.0)) : 0.0);
  }
  return rates;
}

}  // namespace evonet

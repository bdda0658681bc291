#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "evonet/network.hpp"

namespace evonet::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = n(rng);
  return M;
}

inline Vector random_vector(Eigen::Index size, Rng& rng, double scale = 1.0) {
  return random_matrix(size, 1, rng, scale).col(0);
}

/// Network with the given input dim, hidden widths and output dim; weights N(0, scale^2).
inline EvolvingNetwork random_network(std::size_t n, const std::vector<std::size_t>& widths, std::size_t m,
                                      Mode mode, Rng& rng, double scale = 1.0) {
  std::vector<HiddenLayer> layers;
  std::size_t in = n;
  for (std::size_t w : widths) {
    HiddenLayer layer;
    layer.W = random_matrix(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(w), rng, scale);
    layer.b = random_vector(static_cast<Eigen::Index>(w), rng, scale);
    layers.push_back(layer);
    in = w;
  }
  OutputLayer head;
  head.W = random_matrix(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(m), rng, scale);
  head.c = random_vector(static_cast<Eigen::Index>(m), rng, scale);
  return EvolvingNetwork(mode, std::move(layers), std::move(head));
}

/// Reference evaluator written with scalar loops only.
inline std::vector<double> naive_forward(const EvolvingNetwork& net, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (const auto& layer : net.layers()) {
    std::vector<double> next(layer.width());
    for (std::size_t j = 0; j < layer.width(); ++j) {
      double z = layer.b(static_cast<Eigen::Index>(j));
      for (std::size_t i = 0; i < a.size(); ++i)
        z += a[i] * layer.W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      next[j] = 1.0 / (1.0 + std::exp(-z));
    }
    a = next;
  }
  const std::size_t m = net.output_dim();
  std::vector<double> out(m);
  for (std::size_t o = 0; o < m; ++o) {
    double z = net.head().c(static_cast<Eigen::Index>(o));
    for (std::size_t i = 0; i < a.size(); ++i)
      z += a[i] * net.head().W(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o));
    out[o] = z;
  }
  if (net.mode() == Mode::classification) {
    double mx = out[0];
    for (double v : out) mx = std::max(mx, v);
    double total = 0.0;
    for (double& v : out) total += (v = std::exp(v - mx));
    for (double& v : out) v /= total;
  }
  return out;
}

/// Flat views over every parameter, in a fixed order.
inline std::vector<double*> parameter_pointers(EvolvingNetwork& net) {
  std::vector<double*> p;
  for (auto& layer : net.layers()) {
    for (Eigen::Index k = 0; k < layer.W.size(); ++k) p.push_back(layer.W.data() + k);
    for (Eigen::Index k = 0; k < layer.b.size(); ++k) p.push_back(layer.b.data() + k);
  }
  for (Eigen::Index k = 0; k < net.head().W.size(); ++k) p.push_back(net.head().W.data() + k);
  for (Eigen::Index k = 0; k < net.head().c.size(); ++k) p.push_back(net.head().c.data() + k);
  return p;
}

inline std::vector<double> flatten(const Gradient& g) {
  std::vector<double> out;
  for (std::size_t d = 0; d < g.dW.size(); ++d) {
    out.insert(out.end(), g.dW[d].data(), g.dW[d].data() + g.dW[d].size());
    out.insert(out.end(), g.db[d].data(), g.db[d].data() + g.db[d].size());
  }
  out.insert(out.end(), g.dW_out.data(), g.dW_out.data() + g.dW_out.size());
  out.insert(out.end(), g.dc_out.data(), g.dc_out.data() + g.dc_out.size());
  return out;
}

inline std::vector<double> snapshot_values(EvolvingNetwork& net) {
  std::vector<double> out;
  for (double* p : parameter_pointers(net)) out.push_back(*p);
  return out;
}

/// Largest relative deviation between the analytic gradient and a central
/// difference with step h, over all parameters. The denominator is floored
/// so parameters with vanishing gradients are judged on absolute error.
inline double max_gradient_error(EvolvingNetwork net, const RowVector& x, const RowVector& y, double h = 1e-6) {
  const std::vector<double> analytic = flatten(net.gradient(x, y));
  const auto params = parameter_pointers(net);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = *params[k];
    *params[k] = saved + h;
    const double up = net.sample_objective(x, y);
    *params[k] = saved - h;
    const double down = net.sample_objective(x, y);
    *params[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-3});
    worst = std::max(worst, std::abs(numeric - analytic[k]) / denom);
  }
  return worst;
}

inline RowVector one_hot(std::size_t m, std::size_t k) {
  RowVector y = RowVector::Zero(static_cast<Eigen::Index>(m));
  y(static_cast<Eigen::Index>(k)) = 1.0;
  return y;
}

}  // namespace evonet::testing

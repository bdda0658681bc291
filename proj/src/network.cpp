#include "evonet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evonet/errors.hpp"

namespace evonet {

std::string_view to_string(Mode mode) {
  return mode == Mode::classification ? "classification" : "regression";
}

Mode parse_mode(std::string_view text) {
  if (text == "classification") return Mode::classification;
  if (text == "regression") return Mode::regression;
  throw ParameterError("unknown mode '" + std::string(text) + "'");
}

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void softmax_inplace(Eigen::Ref<RowVector, 0, Eigen::InnerStride<>> row) {
  const double top = row.maxCoeff();
  row = (row.array() - top).exp();
  row /= row.sum();
}

double top_two_ratio(std::span<const double> row) {
  if (row.size() < 2) throw ShapeError("confidence ratio needs at least two outputs");
  double y1 = -std::numeric_limits<double>::infinity();
  double y2 = y1;
  for (double v : row) {
    if (v > y1) {
      y2 = y1;
      y1 = v;
    } else if (v > y2) {
      y2 = v;
    }
  }
  const double denom = y1 + y2;
  return denom > 0.0 ? y1 / denom : 0.5;
}

Matrix xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain) {
  const double r = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-r, r);
  Matrix W(fan_in, fan_out);
  for (Eigen::Index j = 0; j < W.cols(); ++j)
    for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = dist(rng);
  return W;
}

EvolvingNetwork::EvolvingNetwork(std::size_t input_dim, std::size_t output_dim, Mode mode,
                                 Rng& rng, std::size_t initial_width, double base_rate)
    : mode_(mode), input_dim_(input_dim), output_dim_(output_dim) {
  if (input_dim == 0 || output_dim == 0 || initial_width == 0)
    throw ShapeError("network dimensions must be positive");
  if (mode == Mode::classification && output_dim < 2)
    throw ShapeError("classification needs at least two outputs");
  HiddenLayer first{xavier_uniform(input_dim, initial_width, rng),
                    Vector::Zero(static_cast<Eigen::Index>(initial_width)), base_rate};
  layers_.push_back(std::move(first));
  head_ = OutputLayer{xavier_uniform(initial_width, output_dim, rng),
                      Vector::Zero(static_cast<Eigen::Index>(output_dim)), base_rate};
}

EvolvingNetwork::EvolvingNetwork(Mode mode, std::vector<HiddenLayer> layers, OutputLayer head)
    : mode_(mode), layers_(std::move(layers)), head_(std::move(head)) {
  if (layers_.empty()) throw ShapeError("network needs at least one hidden layer");
  input_dim_ = layers_.front().input_width();
  output_dim_ = static_cast<std::size_t>(head_.W.cols());
  for (std::size_t d = 0; d < layers_.size(); ++d) {
    const auto& layer = layers_[d];
    if (layer.width() == 0) throw ShapeError("hidden layer of zero width");
    if (static_cast<std::size_t>(layer.b.size()) != layer.width())
      throw ShapeError("bias length does not match layer width");
    if (d > 0 && layer.input_width() != layers_[d - 1].width())
      throw ShapeError("layer input width does not match previous layer width");
  }
  if (static_cast<std::size_t>(head_.W.rows()) != layers_.back().width() ||
      head_.c.size() != head_.W.cols())
    throw ShapeError("output head does not match top layer");
  if (mode_ == Mode::classification && output_dim_ < 2)
    throw ShapeError("classification needs at least two outputs");
}

std::vector<std::size_t> EvolvingNetwork::widths() const {
  std::vector<std::size_t> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) out.push_back(layer.width());
  return out;
}

std::size_t EvolvingNetwork::total_units() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.width();
  return total;
}

std::size_t EvolvingNetwork::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += layer.input_width() * layer.width() + layer.width();
  return count + top_width() * output_dim_ + output_dim_;
}

void EvolvingNetwork::check_input(const Matrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != input_dim_)
    throw ShapeError("expected " + std::to_string(input_dim_) + " input columns, got " +
                     std::to_string(X.cols()));
}

ForwardTrace EvolvingNetwork::forward(const Matrix& X) const {
  check_input(X);
  ForwardTrace trace;
  trace.hidden.reserve(layers_.size());
  const Matrix* input = &X;
  for (const auto& layer : layers_) {
    Matrix pre = (*input) * layer.W;
    pre.rowwise() += layer.b.transpose();
    trace.hidden.push_back(pre.unaryExpr([](double a) { return sigmoid(a); }));
    input = &trace.hidden.back();
  }
  trace.output = (*input) * head_.W;
  trace.output.rowwise() += head_.c.transpose();
  if (mode_ == Mode::classification) {
    for (Eigen::Index r = 0; r < trace.output.rows(); ++r) softmax_inplace(trace.output.row(r));
  }
  return trace;
}

RowVector EvolvingNetwork::apply_head(const Eigen::Ref<const RowVector>& top) const {
  RowVector out = top * head_.W + head_.c.transpose();
  if (mode_ == Mode::classification) softmax_inplace(out);
  return out;
}

RowVector EvolvingNetwork::predict(const Eigen::Ref<const RowVector>& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim_) throw ShapeError("input length mismatch");
  RowVector h = x;
  for (const auto& layer : layers_) {
    RowVector pre = h * layer.W + layer.b.transpose();
    h = pre.unaryExpr([](double a) { return sigmoid(a); });
  }
  return apply_head(h);
}

namespace {

double objective_from_output(Mode mode, const RowVector& out, const Eigen::Ref<const RowVector>& y) {
  if (mode == Mode::classification) {
    double loss = 0.0;
    for (Eigen::Index o = 0; o < out.size(); ++o)
      if (y(o) != 0.0) loss -= y(o) * std::log(std::max(out(o), 1e-300));
    return loss;
  }
  return 0.5 * (out - y).squaredNorm();
}

}  // namespace

double EvolvingNetwork::sample_objective(const Eigen::Ref<const RowVector>& x,
                                         const Eigen::Ref<const RowVector>& y) const {
  return objective_from_output(mode_, predict(x), y);
}

Gradient EvolvingNetwork::gradient(const Eigen::Ref<const RowVector>& x,
                                   const Eigen::Ref<const RowVector>& y) const {
  if (static_cast<std::size_t>(x.size()) != input_dim_ ||
      static_cast<std::size_t>(y.size()) != output_dim_)
    throw ShapeError("sample shape mismatch");
  const std::size_t D = layers_.size();
  std::vector<RowVector> acts;
  acts.reserve(D + 1);
  acts.emplace_back(x);
  for (const auto& layer : layers_) {
    RowVector pre = acts.back() * layer.W + layer.b.transpose();
    acts.emplace_back(pre.unaryExpr([](double a) { return sigmoid(a); }));
  }
  const RowVector out = apply_head(acts.back());

  Gradient g;
  g.dW.resize(D);
  g.db.resize(D);
  // Softmax + cross-entropy and identity + half squared error share this delta.
  RowVector delta = out - y;
  g.dW_out = acts.back().transpose() * delta;
  g.dc_out = delta.transpose();
  RowVector back = delta * head_.W.transpose();
  for (std::size_t d = D; d-- > 0;) {
    const RowVector& h = acts[d + 1];
    RowVector local = back.array() * h.array() * (1.0 - h.array());
    g.dW[d] = acts[d].transpose() * local;
    g.db[d] = local.transpose();
    if (d > 0) back = local * layers_[d].W.transpose();
  }
  return g;
}

double EvolvingNetwork::train_sample(const Eigen::Ref<const RowVector>& x,
                                     const Eigen::Ref<const RowVector>& y,
                                     std::span<const double> rates) {
  if (rates.size() != layers_.size() + 1)
    throw ShapeError("expected one rate per hidden layer plus one for the head");
  const std::size_t D = layers_.size();
  std::vector<RowVector> acts;
  acts.reserve(D + 1);
  acts.emplace_back(x);
  for (const auto& layer : layers_) {
    RowVector pre = acts.back() * layer.W + layer.b.transpose();
    acts.emplace_back(pre.unaryExpr([](double a) { return sigmoid(a); }));
  }
  const RowVector out = apply_head(acts.back());
  const double loss = mode_ == Mode::classification
                          ? objective_from_output(mode_, out, y)
                          : (out - y).squaredNorm() / static_cast<double>(output_dim_);
  if (!std::isfinite(loss)) throw NumericError("non-finite training loss");

  RowVector delta = out - y;
  RowVector back = delta * head_.W.transpose();
  const double head_rate = rates[D];
  if (head_rate != 0.0) {
    head_.W.noalias() -= head_rate * (acts.back().transpose() * delta);
    head_.c -= head_rate * delta.transpose();
  }
  for (std::size_t d = D; d-- > 0;) {
    const RowVector& h = acts[d + 1];
    RowVector local = back.array() * h.array() * (1.0 - h.array());
    if (d > 0) back = local * layers_[d].W.transpose();
    const double rate = rates[d];
    if (rate != 0.0) {
      layers_[d].W.noalias() -= rate * (acts[d].transpose() * local);
      layers_[d].b -= rate * local.transpose();
    }
  }
  return loss;
}

double EvolvingNetwork::train_step(const Matrix& X, const Matrix& Y, std::span<const double> rates) {
  check_input(X);
  if (X.rows() != Y.rows()) throw ShapeError("feature and target row counts differ");
  if (static_cast<std::size_t>(Y.cols()) != output_dim_) throw ShapeError("target width mismatch");
  if (X.rows() == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) total += train_sample(X.row(r), Y.row(r), rates);
  return total / static_cast<double>(X.rows());
}

void EvolvingNetwork::add_hidden_unit(std::span<const double> error, Rng& rng) {
  if (error.size() != output_dim_) throw ShapeError("error vector length must equal output dim");
  for (double e : error)
    if (!std::isfinite(e)) throw NumericError("non-finite error vector");
  HiddenLayer& top = layers_.back();
  const Eigen::Index in = top.W.rows();
  const Eigen::Index R = top.W.cols();

  std::uniform_real_distribution<double> incoming(-0.05, 0.05);
  std::uniform_real_distribution<double> bias(-1.0, 1.0);
  top.W.conservativeResize(in, R + 1);
  for (Eigen::Index i = 0; i < in; ++i) top.W(i, R) = incoming(rng);
  top.b.conservativeResize(R + 1);
  top.b(R) = bias(rng);

  head_.W.conservativeResize(R + 1, head_.W.cols());
  for (std::size_t o = 0; o < output_dim_; ++o) head_.W(R, static_cast<Eigen::Index>(o)) = -error[o];
}

bool EvolvingNetwork::remove_hidden_unit(std::size_t index) {
  HiddenLayer& top = layers_.back();
  const auto R = static_cast<std::size_t>(top.W.cols());
  if (R <= 1) return false;
  if (index >= R) throw ShapeError("unit index out of range");
  const auto k = static_cast<Eigen::Index>(index);
  const Eigen::Index tail = static_cast<Eigen::Index>(R) - k - 1;

  Matrix W(top.W.rows(), R - 1);
  W << top.W.leftCols(k), top.W.rightCols(tail);
  Vector b(R - 1);
  b << top.b.head(k), top.b.tail(tail);
  Matrix Wout(R - 1, head_.W.cols());
  Wout << head_.W.topRows(k), head_.W.bottomRows(tail);
  top.W = std::move(W);
  top.b = std::move(b);
  head_.W = std::move(Wout);
  return true;
}

void EvolvingNetwork::add_hidden_layer(std::size_t init_width, Rng& rng, double eta) {
  if (init_width == 0) throw ShapeError("new layer needs at least one unit");
  const std::size_t below = top_width();
  HiddenLayer layer{xavier_uniform(below, init_width, rng, kSigmoidGain),
                    Vector::Zero(static_cast<Eigen::Index>(init_width)), eta};
  layers_.push_back(std::move(layer));
  head_.W = xavier_uniform(init_width, output_dim_, rng);
  head_.c = Vector::Zero(static_cast<Eigen::Index>(output_dim_));
}

std::vector<double> EvolvingNetwork::rates() const {
  std::vector<double> out;
  out.reserve(layers_.size() + 1);
  for (const auto& layer : layers_) out.push_back(layer.eta);
  out.push_back(head_.eta);
  return out;
}

void EvolvingNetwork::set_rates(std::span<const double> rates) {
  if (rates.size() != layers_.size() + 1) throw ShapeError("rate vector length must be depth + 1");
  for (std::size_t d = 0; d < layers_.size(); ++d) layers_[d].eta = rates[d];
  head_.eta = rates.back();
}

double EvolvingNetwork::confidence_ratio(std::span<const double> output_row) const {
  if (mode_ != Mode::classification)
    throw UnsupportedOperation("confidence ratio is only defined for softmax outputs");
  if (output_row.size() != output_dim_) throw ShapeError("output row length mismatch");
  return top_two_ratio(output_row);
}

bool EvolvingNetwork::all_finite() const {
  for (const auto& layer : layers_)
    if (!layer.W.allFinite() || !layer.b.allFinite()) return false;
  return head_.W.allFinite() && head_.c.allFinite();
}

}  // namespace evonet

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "aae/error.hpp"
#include "aae/matrix.hpp"
#include "aae/random.hpp"

namespace aae {

inline constexpr double kProbabilityClip = 1e-12;
inline constexpr double kAdamEpsilon = 1e-8;

// ---------------------------------------------------------------------------
// Activations

enum class Activation { linear, lrelu, sigmoid };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::lrelu: return "lrelu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: break;
  }
  return "linear";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "linear") return Activation::linear;
  if (s == "lrelu") return Activation::lrelu;
  if (s == "sigmoid") return Activation::sigmoid;
  throw ArgumentError("unknown activation '" + std::string(s) + "'");
}

inline double lrelu(double x, double slope) { return x >= 0.0 ? x : slope * x; }

// Logistic function kept strictly inside (0, 1): saturated tails are pinned to
// the nearest representable values instead of rounding to 0 or 1.
inline double sigmoid(double x) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, lo, hi);
}

// ---------------------------------------------------------------------------
// Layers

struct DenseLayer {
  Matrix weights;  // fan_out x fan_in
  Vector bias;     // fan_out
  Activation activation = Activation::linear;
  double slope = 0.4;  // lrelu only

  std::size_t fan_in() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t fan_out() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t parameter_count() const { return fan_in() * fan_out() + fan_out(); }
};

struct Mlp {
  std::vector<DenseLayer> layers;

  std::size_t input_width() const { return layers.front().fan_in(); }
  std::size_t output_width() const { return layers.back().fan_out(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  void validate() const {
    if (layers.empty()) throw ShapeError("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (static_cast<std::size_t>(l.bias.size()) != l.fan_out())
        throw ShapeError("layer " + std::to_string(i) + ": bias length differs from fan_out");
      if (i > 0 && layers[i - 1].fan_out() != l.fan_in())
        throw ShapeError("layer " + std::to_string(i) + ": fan_in does not chain with previous fan_out");
      if (l.activation == Activation::lrelu && !(l.slope > 0.0 && l.slope < 1.0))
        throw ShapeError("layer " + std::to_string(i) + ": lrelu slope outside (0,1)");
    }
  }
};

// Glorot/Xavier uniform: U[-L, L] with L = sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in == 0 || fan_out == 0) throw ArgumentError("glorot_init needs non-zero dimensions");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
  return w;
}

inline Matrix glorot_init(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  Rng rng(seed);
  return glorot_init(fan_in, fan_out, rng);
}

// Builds input -> widths[0] -> ... -> widths.back(). Hidden layers use
// `hidden`, the last layer uses `output`. Biases start at zero.
inline Mlp make_mlp(std::size_t input, const std::vector<std::size_t>& widths, Activation hidden, Activation output,
                    double slope, Rng& rng) {
  Mlp net;
  std::size_t fan_in = input;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    DenseLayer layer;
    layer.weights = glorot_init(fan_in, widths[i], rng);
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(widths[i]));
    layer.activation = i + 1 == widths.size() ? output : hidden;
    layer.slope = slope;
    net.layers.push_back(std::move(layer));
    fan_in = widths[i];
  }
  net.validate();
  return net;
}

// ---------------------------------------------------------------------------
// Forward / backward

struct ActivationTrace {
  std::vector<Matrix> inputs;       // input to layer l
  std::vector<Matrix> pre;          // W x + b of layer l
  Matrix output;                    // activation of the last layer

  const Matrix& post(std::size_t l) const { return l + 1 < inputs.size() ? inputs[l + 1] : output; }
};

inline void apply_activation(const DenseLayer& layer, const Matrix& pre, Matrix& post) {
  switch (layer.activation) {
    case Activation::linear:
      post = pre;
      break;
    case Activation::lrelu: {
      const double s = layer.slope;
      post = pre.unaryExpr([s](double x) { return lrelu(x, s); });
      break;
    }
    case Activation::sigmoid:
      post = pre.unaryExpr([](double x) { return sigmoid(x); });
      break;
  }
}

inline ActivationTrace forward(const Mlp& mlp, const Matrix& inputs) {
  ActivationTrace trace;
  trace.inputs.reserve(mlp.layers.size());
  trace.pre.reserve(mlp.layers.size());
  Matrix current = inputs;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    if (static_cast<std::size_t>(current.cols()) != layer.fan_in())
      throw ShapeError("layer " + std::to_string(l) + ": expected input width " + std::to_string(layer.fan_in()) +
                       ", got " + std::to_string(current.cols()));
    Matrix pre = current * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    Matrix post;
    apply_activation(layer, pre, post);
    trace.inputs.push_back(std::move(current));
    trace.pre.push_back(std::move(pre));
    current = std::move(post);
  }
  trace.output = std::move(current);
  return trace;
}

// Output only; no trace is kept.
inline Matrix predict(const Mlp& mlp, const Matrix& inputs) {
  Matrix current = inputs;
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    if (static_cast<std::size_t>(current.cols()) != layer.fan_in())
      throw ShapeError("layer " + std::to_string(l) + ": expected input width " + std::to_string(layer.fan_in()) +
                       ", got " + std::to_string(current.cols()));
    Matrix pre = current * layer.weights.transpose();
    pre.rowwise() += layer.bias.transpose();
    apply_activation(layer, pre, current);
  }
  return current;
}

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> bias;
  // Per-sample gradient with respect to the network input (not averaged),
  // so it can be fed as output_grad into an upstream network.
  Matrix input;
};

// output_grad holds, for each sample i, d loss_i / d output_i. Parameter
// gradients are of the batch-mean loss (1/B) sum_i loss_i.
inline Gradients backward(const Mlp& mlp, const ActivationTrace& trace, const Matrix& output_grad) {
  const std::size_t n_layers = mlp.layers.size();
  if (trace.pre.size() != n_layers) throw ShapeError("trace does not belong to this network");
  if (output_grad.rows() != trace.output.rows() || output_grad.cols() != trace.output.cols())
    throw ShapeError("output gradient shape " + std::to_string(output_grad.rows()) + "x" +
                     std::to_string(output_grad.cols()) + " does not match network output " +
                     std::to_string(trace.output.rows()) + "x" + std::to_string(trace.output.cols()));

  const double inv_batch = 1.0 / static_cast<double>(std::max<Eigen::Index>(1, output_grad.rows()));
  Gradients grads;
  grads.weights.resize(n_layers);
  grads.bias.resize(n_layers);

  Matrix delta = output_grad;
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = mlp.layers[li];
    switch (layer.activation) {
      case Activation::linear:
        break;
      case Activation::lrelu: {
        const double s = layer.slope;
        delta.array() *= trace.pre[li].array().unaryExpr([s](double x) { return x >= 0.0 ? 1.0 : s; });
        break;
      }
      case Activation::sigmoid: {
        const auto& y = trace.post(li).array();
        delta.array() *= y * (1.0 - y);
        break;
      }
    }
    grads.weights[li] = (delta.transpose() * trace.inputs[li]) * inv_batch;
    grads.bias[li] = delta.colwise().sum().transpose() * inv_batch;
    delta = delta * layer.weights;
  }
  grads.input = std::move(delta);
  return grads;
}

// ---------------------------------------------------------------------------
// Losses

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // d value / d prediction
};

// (1/k) sum (x - x_hat)^2 and its gradient with respect to x_hat.
inline LossResult mse_loss(std::span<const double> target, std::span<const double> predicted) {
  if (target.size() != predicted.size() || target.empty())
    throw ShapeError("mse_loss needs equal, non-zero lengths");
  const double k = static_cast<double>(target.size());
  LossResult r;
  r.grad.resize(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    const double d = predicted[j] - target[j];
    r.value += d * d;
    r.grad[j] = 2.0 * d / k;
  }
  r.value /= k;
  return r;
}

inline void check_one_hot_blocks(std::span<const double> target, std::span<const std::size_t> block_sizes) {
  std::size_t at = 0;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    double sum = 0.0;
    for (std::size_t j = 0; j < block_sizes[b]; ++j) {
      const double t = target[at + j];
      if (t != 0.0 && t != 1.0) throw EncodeError("block " + std::to_string(b) + " holds a non-binary value");
      sum += t;
    }
    if (sum != 1.0) throw EncodeError("block " + std::to_string(b) + " is not one-hot");
    at += block_sizes[b];
  }
  if (at != target.size()) throw EncodeError("block sizes do not cover the categorical dimensions");
}

// Mean binary cross-entropy over all categorical dimensions. Predictions are
// clipped to [1e-12, 1 - 1e-12] before taking logs.
inline LossResult cross_entropy_loss(std::span<const double> target, std::span<const double> predicted,
                                     std::span<const std::size_t> block_sizes) {
  if (target.size() != predicted.size() || target.empty())
    throw ShapeError("cross_entropy_loss needs equal, non-zero lengths");
  check_one_hot_blocks(target, block_sizes);
  const double k = static_cast<double>(target.size());
  LossResult r;
  r.grad.resize(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    const double p = std::clamp(predicted[j], kProbabilityClip, 1.0 - kProbabilityClip);
    const double t = target[j];
    r.value -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    r.grad[j] = (-t / p + (1.0 - t) / (1.0 - p)) / k;
  }
  r.value /= k;
  return r;
}

// Batch form used in training: per row, gamma * CE over the first
// `categorical_dims` columns plus (1 - gamma) * MSE over the rest. Returns
// the batch mean and the per-row gradient matrix (not divided by B).
struct BatchLoss {
  double value = 0.0;
  Matrix grad;
};

inline BatchLoss combined_reconstruction_loss(const Matrix& target, const Matrix& predicted,
                                              std::size_t categorical_dims, double gamma) {
  if (target.rows() != predicted.rows() || target.cols() != predicted.cols())
    throw ShapeError("reconstruction target and prediction shapes differ");
  const auto kc = static_cast<Eigen::Index>(categorical_dims);
  const Eigen::Index kn = target.cols() - kc;
  if (kn < 0) throw ShapeError("categorical width exceeds encoded width");
  BatchLoss out;
  out.grad = Matrix::Zero(target.rows(), target.cols());
  double total = 0.0;
  if (kc > 0) {
    const auto t = target.leftCols(kc).array();
    const auto p = predicted.leftCols(kc).array().max(kProbabilityClip).min(1.0 - kProbabilityClip);
    const double ce_sum = -(t * p.log() + (1.0 - t) * (1.0 - p).log()).sum();
    total += gamma * ce_sum / static_cast<double>(kc);
    out.grad.leftCols(kc).array() = gamma * (-t / p + (1.0 - t) / (1.0 - p)) / static_cast<double>(kc);
  }
  if (kn > 0) {
    const auto d = (predicted.rightCols(kn) - target.rightCols(kn)).array();
    total += (1.0 - gamma) * d.square().sum() / static_cast<double>(kn);
    out.grad.rightCols(kn).array() = (1.0 - gamma) * 2.0 * d / static_cast<double>(kn);
  }
  out.value = total / static_cast<double>(std::max<Eigen::Index>(1, target.rows()));
  return out;
}

// Mean binary cross-entropy of a single-column probability output against a
// constant label, with per-row gradient.
inline BatchLoss binary_cross_entropy(const Matrix& predicted, double label) {
  BatchLoss out;
  const auto p = predicted.array().max(kProbabilityClip).min(1.0 - kProbabilityClip);
  out.value = -(label * p.log() + (1.0 - label) * (1.0 - p).log()).sum() /
              static_cast<double>(std::max<Eigen::Index>(1, predicted.rows()));
  out.grad = (-label / p + (1.0 - label) / (1.0 - p)).matrix();
  return out;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = kAdamEpsilon;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_bias, v_bias;
  std::uint64_t step_count = 0;

  static AdamState for_network(const Mlp& mlp, const AdamConfig& config) {
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0))
      throw ArgumentError("Adam betas must lie in [0, 1)");
    if (!(config.learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    AdamState s;
    s.config = config;
    for (const auto& l : mlp.layers) {
      s.m_weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
      s.v_weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
      s.m_bias.push_back(Vector::Zero(l.bias.size()));
      s.v_bias.push_back(Vector::Zero(l.bias.size()));
    }
    return s;
  }
};

namespace detail {

template <typename Param, typename Moment>
void adam_update(Param& param, const Param& grad, Moment& m, Moment& v, const AdamConfig& c, double corr1,
                 double corr2) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * grad.array().square();
  param.array() -=
      c.learning_rate * (m.array() / corr1) / ((v.array() / corr2).sqrt() + c.epsilon);
}

}  // namespace detail

// Adam with bias correction. Increments step_count before the update.
inline void adam_step(AdamState& state, Mlp& mlp, const Gradients& grads) {
  const std::size_t n = mlp.layers.size();
  if (state.m_weights.size() != n || grads.weights.size() != n || grads.bias.size() != n)
    throw ShapeError("optimizer state or gradients do not match the network");
  for (std::size_t l = 0; l < n; ++l) {
    const auto& w = mlp.layers[l].weights;
    if (grads.weights[l].rows() != w.rows() || grads.weights[l].cols() != w.cols() ||
        state.m_weights[l].rows() != w.rows() || state.m_weights[l].cols() != w.cols() ||
        grads.bias[l].size() != mlp.layers[l].bias.size())
      throw ShapeError("layer " + std::to_string(l) + ": gradient shape mismatch");
  }
  ++state.step_count;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step_count);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t l = 0; l < n; ++l) {
    detail::adam_update(mlp.layers[l].weights, grads.weights[l], state.m_weights[l], state.v_weights[l], c, corr1,
                        corr2);
    detail::adam_update(mlp.layers[l].bias, grads.bias[l], state.m_bias[l], state.v_bias[l], c, corr1, corr2);
  }
}

}  // namespace aae

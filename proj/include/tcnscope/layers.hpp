#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcnscope/tensor.hpp"

namespace tcnscope {

inline Tensor relu(Tensor x) {
  for (auto& v : x.values()) v = v > 0.0 ? v : 0.0;
  return x;
}

/// Gradient through relu given its input; the subgradient at 0 is 0.
inline Tensor relu_backward(const Tensor& input, Tensor grad) {
  require_shape(grad, input.shape(), "relu_backward");
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(input[i] > 0.0)) grad[i] = 0.0;
  return grad;
}

/// Per-element multiplier applied by dropout (0 or 1/(1-p)); empty means identity.
struct DropoutMask {
  Tensor scale;
};

/// Inverted dropout: eval mode and p == 0 return the input untouched.
inline Tensor dropout(Tensor x, double p, Mode mode, std::uint64_t seed, DropoutMask* mask = nullptr) {
  if (!(p >= 0.0) || p >= 1.0) throw ParameterError("dropout: p must lie in [0, 1), got " + std::to_string(p));
  if (mask) mask->scale = Tensor();
  if (mode == Mode::eval || p == 0.0) return x;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep = 1.0 / (1.0 - p);
  Tensor scale = zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    scale[i] = unit(rng) < p ? 0.0 : keep;
    x[i] *= scale[i];
  }
  if (mask) mask->scale = std::move(scale);
  return x;
}

inline Tensor dropout_backward(Tensor grad, const DropoutMask& mask) {
  if (mask.scale.empty()) return grad;
  require_shape(grad, mask.scale.shape(), "dropout_backward");
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask.scale[i];
  return grad;
}

/// Mean over the temporal axis: B×T×C -> B×C.
inline Tensor global_average_pool(const Tensor& x) {
  require_rank(x, 3, "global_average_pool");
  const std::size_t B = x.extent(0), T = x.extent(1), C = x.extent(2);
  Tensor out({B, C});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c) out.at(b, c) += x.at(b, t, c);
    for (std::size_t c = 0; c < C; ++c) out.at(b, c) /= static_cast<double>(T);
  }
  return out;
}

inline Tensor global_average_pool_backward(const Tensor& grad, std::size_t length) {
  require_rank(grad, 2, "global_average_pool_backward");
  const std::size_t B = grad.extent(0), C = grad.extent(1);
  Tensor dx({B, length, C});
  const double w = 1.0 / static_cast<double>(length);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t c = 0; c < C; ++c) dx.at(b, t, c) = grad.at(b, c) * w;
  return dx;
}

/// input·weights + bias for B×C input, C×K weights, K bias.
inline Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(input, 2, "dense input");
  const std::size_t B = input.extent(0), C = input.extent(1);
  require_rank(weights, 2, "dense weights");
  if (weights.extent(0) != C) throw ShapeError("dense: weight rows do not match input width");
  const std::size_t K = weights.extent(1);
  require_shape(bias, {K}, "dense bias");
  Tensor out({B, K});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < K; ++k) {
      double acc = bias[k];
      for (std::size_t c = 0; c < C; ++c) acc += input.at(b, c) * weights.at(c, k);
      out.at(b, k) = acc;
    }
  return out;
}

struct SoftmaxXent {
  double loss = 0.0;
  Tensor probs;
};

inline void check_labels(std::span<const int> labels, std::size_t batch, std::size_t classes) {
  if (labels.size() != batch) throw DataError("label count does not match batch size");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= classes)
      throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
}

/// Row softmax and mean cross-entropy of B×K logits.
inline SoftmaxXent softmax_xent(const Tensor& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_xent logits");
  const std::size_t B = logits.extent(0), K = logits.extent(1);
  check_labels(labels, B, K);
  SoftmaxXent r{0.0, zeros_like(logits)};
  for (std::size_t b = 0; b < B; ++b) {
    double m = logits.at(b, 0);
    for (std::size_t k = 1; k < K; ++k) m = std::max(m, logits.at(b, k));
    double z = 0.0;
    for (std::size_t k = 0; k < K; ++k) z += std::exp(logits.at(b, k) - m);
    const double lse = m + std::log(z);
    for (std::size_t k = 0; k < K; ++k) r.probs.at(b, k) = std::exp(logits.at(b, k) - lse);
    r.loss += lse - logits.at(b, static_cast<std::size_t>(labels[b]));
  }
  r.loss /= static_cast<double>(B);
  return r;
}

/// d(mean xent)/d(logits) = (probs - onehot) / B.
inline Tensor softmax_xent_backward(const Tensor& probs, std::span<const int> labels) {
  Tensor g = probs;
  const std::size_t B = probs.extent(0);
  for (std::size_t b = 0; b < B; ++b) g.at(b, static_cast<std::size_t>(labels[b])) -= 1.0;
  for (auto& v : g.values()) v /= static_cast<double>(B);
  return g;
}

/// Accumulates weight/bias gradients and returns the input gradient of a dense layer.
inline Tensor dense_backward(const Tensor& input, Parameter& weights, Parameter& bias, const Tensor& grad_out) {
  const std::size_t B = input.extent(0), C = input.extent(1), K = weights.value.extent(1);
  require_shape(grad_out, {B, K}, "dense_backward grad");
  Tensor dx = zeros_like(input);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t k = 0; k < K; ++k) {
      const double g = grad_out.at(b, k);
      bias.grad[k] += g;
      for (std::size_t c = 0; c < C; ++c) {
        weights.grad.at(c, k) += g * input.at(b, c);
        dx.at(b, c) += g * weights.value.at(c, k);
      }
    }
  return dx;
}

/// Affine map, softmax and mean cross-entropy in one step.
inline SoftmaxXent dense_softmax_xent(const Tensor& input, const Parameter& weights, const Parameter& bias,
                                      std::span<const int> labels) {
  return softmax_xent(dense(input, weights.value, bias.value), labels);
}

/// Backward of dense_softmax_xent; accumulates into weights/bias and returns d(loss)/d(input).
inline Tensor dense_softmax_xent_backward(const Tensor& input, Parameter& weights, Parameter& bias,
                                          const SoftmaxXent& forward, std::span<const int> labels) {
  return dense_backward(input, weights, bias, softmax_xent_backward(forward.probs, labels));
}

}  // namespace tcnscope

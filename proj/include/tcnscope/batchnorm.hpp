#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "tcnscope/tensor.hpp"

namespace tcnscope {

struct BatchNormState {
  Parameter scale;
  Parameter shift;
  Tensor running_mean;
  Tensor running_var;
  double epsilon = 1e-5;
  /// weight of the old running value in the exponential update
  double momentum = 0.9;

  static BatchNormState create(std::size_t channels, const std::string& name) {
    BatchNormState s;
    s.scale = Parameter(name + ".scale", Tensor({channels}, 1.0));
    s.shift = Parameter(name + ".shift", Tensor({channels}, 0.0));
    s.running_mean = Tensor({channels}, 0.0);
    s.running_var = Tensor({channels}, 1.0);
    return s;
  }

  std::size_t channels() const { return scale.value.size(); }
};

struct BatchNormCache {
  Mode mode = Mode::eval;
  Tensor normalized;
  std::vector<double> inv_std;
};

/**
 * Per-channel normalization of a B×T×C tensor.
 *
 * Train mode normalizes with the biased batch statistics over B×T and folds
 * the unbiased variance into the running estimates; eval mode uses only the
 * running estimates.
 */
inline Tensor batchnorm(const Tensor& input, BatchNormState& state, Mode mode, BatchNormCache* cache = nullptr) {
  require_rank(input, 3, "batchnorm input");
  const std::size_t C = input.extent(2);
  if (C != state.channels()) {
    throw ShapeError("batchnorm: input channels " + std::to_string(C) + " != state channels " +
                     std::to_string(state.channels()));
  }
  const std::size_t rows = input.extent(0) * input.extent(1);
  if (rows == 0) throw ParameterError("batchnorm: empty batch-time extent");
  Tensor out = zeros_like(input);
  Tensor normalized = zeros_like(input);
  std::vector<double> inv_std(C);
  const double* x = input.data();
  const double* gamma = state.scale.value.data();
  const double* beta = state.shift.value.data();

  if (mode == Mode::train) {
    std::vector<double> mean(C, 0.0), var(C, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) mean[c] += x[r * C + c];
    for (auto& m : mean) m /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = x[r * C + c] - mean[c];
        var[c] += d * d;
      }
    for (auto& v : var) v /= static_cast<double>(rows);
    for (std::size_t c = 0; c < C; ++c) {
      inv_std[c] = 1.0 / std::sqrt(var[c] + state.epsilon);
      const double unbiased = rows > 1 ? var[c] * static_cast<double>(rows) / static_cast<double>(rows - 1) : var[c];
      state.running_mean[c] = state.momentum * state.running_mean[c] + (1.0 - state.momentum) * mean[c];
      state.running_var[c] = state.momentum * state.running_var[c] + (1.0 - state.momentum) * unbiased;
    }
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double n = (x[r * C + c] - mean[c]) * inv_std[c];
        normalized[r * C + c] = n;
        out[r * C + c] = gamma[c] * n + beta[c];
      }
  } else {
    for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.epsilon);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double n = (x[r * C + c] - state.running_mean[c]) * inv_std[c];
        normalized[r * C + c] = n;
        out[r * C + c] = gamma[c] * n + beta[c];
      }
  }
  if (cache) {
    cache->mode = mode;
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return out;
}

/// Accumulates scale/shift gradients into `state` and returns the input gradient.
inline Tensor batchnorm_backward(const Tensor& grad_out, BatchNormState& state, const BatchNormCache& cache) {
  require_shape(grad_out, cache.normalized.shape(), "batchnorm_backward grad");
  const std::size_t C = state.channels();
  const std::size_t rows = grad_out.size() / C;
  const double* dy = grad_out.data();
  const double* xhat = cache.normalized.data();
  const double* gamma = state.scale.value.data();
  std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      sum_dy[c] += dy[r * C + c];
      sum_dy_xhat[c] += dy[r * C + c] * xhat[r * C + c];
    }
  for (std::size_t c = 0; c < C; ++c) {
    state.scale.grad[c] += sum_dy_xhat[c];
    state.shift.grad[c] += sum_dy[c];
  }
  Tensor dx = zeros_like(grad_out);
  if (cache.mode == Mode::eval) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < C; ++c) dx[r * C + c] = dy[r * C + c] * gamma[c] * cache.inv_std[c];
    return dx;
  }
  const double n = static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < C; ++c) {
      const double g = gamma[c] * cache.inv_std[c] / n;
      dx[r * C + c] = g * (n * dy[r * C + c] - sum_dy[c] - xhat[r * C + c] * sum_dy_xhat[c]);
    }
  return dx;
}

}  // namespace tcnscope

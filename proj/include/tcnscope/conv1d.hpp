#pragma once

#include <cstddef>
#include <string>

#include "tcnscope/tensor.hpp"

namespace tcnscope {

enum class Padding { same, valid };

struct ConvGeometry {
  std::size_t out_len = 0;
  /// zeros prepended to the input; `same` puts any odd extra zero at the trailing end
  std::size_t pad_front = 0;
};

inline ConvGeometry conv_geometry(std::size_t length, std::size_t filter_len, int stride, Padding padding) {
  if (stride <= 0) throw ParameterError("conv1d: stride must be positive, got " + std::to_string(stride));
  const auto s = static_cast<std::size_t>(stride);
  if (padding == Padding::valid) {
    if (filter_len > length) {
      throw ShapeError("conv1d: filter length " + std::to_string(filter_len) + " exceeds input length " +
                       std::to_string(length));
    }
    return {(length - filter_len) / s + 1, 0};
  }
  const std::size_t out = (length + s - 1) / s;
  const std::size_t needed = (out - 1) * s + filter_len;
  const std::size_t total = needed > length ? needed - length : 0;
  return {out, total / 2};
}

/**
 * Temporal cross-correlation without bias.
 *
 * input: B×T×C_in, filters: N×f×C_in, result: B×T'×N with
 * out[b][o][n] = sum_k sum_c in[b][o*stride + k - pad_front][c] * w[n][k][c].
 */
inline Tensor conv1d(const Tensor& input, const Tensor& filters, int stride, Padding padding) {
  require_rank(input, 3, "conv1d input");
  require_rank(filters, 3, "conv1d filters");
  const std::size_t B = input.extent(0), T = input.extent(1), C = input.extent(2);
  const std::size_t N = filters.extent(0), F = filters.extent(1);
  if (filters.extent(2) != C) {
    throw ShapeError("conv1d: filter channels " + std::to_string(filters.extent(2)) + " != input channels " +
                     std::to_string(C));
  }
  const auto geo = conv_geometry(T, F, stride, padding);
  const auto s = static_cast<std::size_t>(stride);
  Tensor out({B, geo.out_len, N});
  const double* x = input.data();
  const double* w = filters.data();
  double* y = out.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < geo.out_len; ++o) {
      double* yrow = y + (b * geo.out_len + o) * N;
      for (std::size_t k = 0; k < F; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * s + k) - static_cast<std::ptrdiff_t>(geo.pad_front);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(T)) continue;
        const double* xrow = x + (b * T + static_cast<std::size_t>(pos)) * C;
        for (std::size_t n = 0; n < N; ++n) {
          const double* wrow = w + (n * F + k) * C;
          double acc = 0.0;
          for (std::size_t c = 0; c < C; ++c) acc += xrow[c] * wrow[c];
          yrow[n] += acc;
        }
      }
    }
  }
  return out;
}

struct ConvGrads {
  Tensor input;
  Tensor filters;
};

/// Exact gradients of sum(grad_out * conv1d(input, filters)) with respect to both operands.
inline ConvGrads conv1d_backward(const Tensor& input, const Tensor& filters, const Tensor& grad_out, int stride,
                                 Padding padding) {
  const std::size_t B = input.extent(0), T = input.extent(1), C = input.extent(2);
  const std::size_t N = filters.extent(0), F = filters.extent(1);
  const auto geo = conv_geometry(T, F, stride, padding);
  require_shape(grad_out, {B, geo.out_len, N}, "conv1d_backward grad");
  const auto s = static_cast<std::size_t>(stride);
  ConvGrads g{zeros_like(input), zeros_like(filters)};
  const double* x = input.data();
  const double* w = filters.data();
  const double* dy = grad_out.data();
  double* dx = g.input.data();
  double* dw = g.filters.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < geo.out_len; ++o) {
      const double* dyrow = dy + (b * geo.out_len + o) * N;
      for (std::size_t k = 0; k < F; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(o * s + k) - static_cast<std::ptrdiff_t>(geo.pad_front);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(T)) continue;
        const double* xrow = x + (b * T + static_cast<std::size_t>(pos)) * C;
        double* dxrow = dx + (b * T + static_cast<std::size_t>(pos)) * C;
        for (std::size_t n = 0; n < N; ++n) {
          const double gy = dyrow[n];
          if (gy == 0.0) continue;
          const double* wrow = w + (n * F + k) * C;
          double* dwrow = dw + (n * F + k) * C;
          for (std::size_t c = 0; c < C; ++c) {
            dwrow[c] += gy * xrow[c];
            dxrow[c] += gy * wrow[c];
          }
        }
      }
    }
  }
  return g;
}

}  // namespace tcnscope

#pragma once

// Test-only reference implementations. Nothing here calls into the code paths
// it is used to check.

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "tcnscope/tensor.hpp"

namespace oracle {

using tcnscope::Tensor;

inline Tensor random_tensor(Tensor::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

/// Explicitly zero-padded nested-loop correlation; same padding puts the odd zero at the end.
inline Tensor conv1d(const Tensor& x, const Tensor& w, int stride, bool same) {
  const std::size_t B = x.shape()[0], T = x.shape()[1], C = x.shape()[2];
  const std::size_t N = w.shape()[0], F = w.shape()[1];
  std::size_t front = 0, back = 0, out_len = 0;
  if (same) {
    out_len = (T + stride - 1) / stride;
    const long total = std::max<long>(0, static_cast<long>((out_len - 1) * stride + F) - static_cast<long>(T));
    front = static_cast<std::size_t>(total / 2);
    back = static_cast<std::size_t>(total) - front;
  } else {
    out_len = (T - F) / stride + 1;
  }
  const std::size_t P = T + front + back;
  std::vector<double> padded(B * P * C, 0.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t c = 0; c < C; ++c) padded[(b * P + t + front) * C + c] = x.at(b, t, c);
  Tensor y({B, out_len, N});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < out_len; ++o)
      for (std::size_t n = 0; n < N; ++n) {
        double s = 0.0;
        for (std::size_t k = 0; k < F; ++k)
          for (std::size_t c = 0; c < C; ++c) s += padded[(b * P + o * stride + k) * C + c] * w.at(n, k, c);
        y.at(b, o, n) = s;
      }
  return y;
}

/// Central finite differences of a scalar function with respect to every element of `x`.
inline Tensor numeric_gradient(Tensor& x, const std::function<double()>& f, double step = 1e-3) {
  Tensor g = tcnscope::zeros_like(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + step;
    const double up = f();
    x[i] = keep - step;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const Tensor& a, const Tensor& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Fixed random projection used to turn tensor outputs into a scalar loss.
inline double weighted_sum(const Tensor& y, const Tensor& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * weights[i];
  return s;
}

}  // namespace oracle

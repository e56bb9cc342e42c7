#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tcnscope/error.hpp"

namespace tcnscope {

/// Train/eval switch shared by every layer with mode-dependent behavior.
enum class Mode { train, eval };

/**
 * Dense row-major array of doubles.
 *
 * A default-constructed tensor is empty (rank 0, no data) and acts as a
 * "not recorded" placeholder; every other tensor has strictly positive extents.
 */
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    data_.assign(checked_count(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_count(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const {
    if (axis >= shape_.size()) throw ShapeError("axis out of range for shape " + shape_string(shape_));
    return shape_[axis];
  }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * shape_[1] + j) * shape_[2] + k]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  /// Slice `index` of the leading axis, with that axis dropped.
  Tensor slice(std::size_t index) const {
    if (rank() < 2 || index >= shape_[0]) throw ShapeError("slice index out of range");
    Shape inner(shape_.begin() + 1, shape_.end());
    const std::size_t stride = data_.size() / shape_[0];
    return Tensor(inner, std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(index * stride),
                                             data_.begin() + static_cast<std::ptrdiff_t>((index + 1) * stride)));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

  static std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
  }

 private:
  static std::size_t checked_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto e : shape) {
      if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
      n *= e;
    }
    return n;
  }

  Shape shape_;
  std::vector<double> data_;
};

inline Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

inline void require_shape(const Tensor& t, const Tensor::Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected " + Tensor::shape_string(expected) + ", got " +
                     Tensor::shape_string(t.shape()));
  }
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     Tensor::shape_string(t.shape()));
  }
}

/// a += b
inline void add_inplace(Tensor& a, const Tensor& b) {
  require_shape(b, a.shape(), "add");
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
}

inline Tensor add(Tensor a, const Tensor& b) {
  add_inplace(a, b);
  return a;
}

inline Tensor scaled(Tensor a, double s) {
  for (auto& v : a.values()) v *= s;
  return a;
}

inline bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_shape(b, a.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Concatenate two B×T×C tensors along the channel axis.
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.extent(0) != b.extent(0) || a.extent(1) != b.extent(1)) throw ShapeError("concat_channels: leading extents differ");
  const std::size_t rows = a.extent(0) * a.extent(1), ca = a.extent(2), cb = b.extent(2);
  Tensor out({a.extent(0), a.extent(1), ca + cb});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(b.data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return out;
}

/// Learnable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  /// Receives the L1 penalty during sgd steps (convolution weights only).
  bool regularized = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v, bool l1 = false)
      : name(std::move(n)), value(std::move(v)), grad(zeros_like(value)), regularized(l1) {}

  void zero_grad() { grad.fill(0.0); }
};

/// splitmix64 finalizer; derives independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace tcnscope

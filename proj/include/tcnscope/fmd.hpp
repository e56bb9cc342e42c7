#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "tcnscope/conv1d.hpp"
#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/msnet.hpp"
#include "tcnscope/restcn.hpp"
#include "tcnscope/tensor.hpp"

namespace tcnscope {

// Feature map decoder: turns recorded hidden activations back into
// skeleton-space sequences using first-layer motion primitives compressed to
// one frame each, with block-boundary retrieval for the deeper blocks.

/// Read-only view of one convolutional trunk and its architecture.
struct DecoderView {
  const Stack& stack;
  const ResTCNConfig& config;
};

inline DecoderView decoder_view(const ResTCN& model) { return {model.stack(), model.config()}; }

enum class Stream { main, ta };

inline DecoderView decoder_view(const MSResTCN& model, Stream stream) {
  return {stream == Stream::main ? model.main_stack() : model.ta_stack(), model.config().base};
}

struct CompressedFilterBank {
  int layer = 0;
  /// N×C_in; row i is the mean of the two innermost time steps of filter i
  Tensor residual;
  /// N×C_in length-1 shortcut filters (layers 5 and 8 only)
  std::optional<Tensor> projection;
};

/// Mean of the two innermost temporal rows of every N×f×C filter -> N×C.
inline Tensor compress_temporal(const Tensor& filters) {
  require_rank(filters, 3, "compress_temporal");
  const std::size_t N = filters.extent(0), F = filters.extent(1), C = filters.extent(2);
  if (F % 2 != 0) throw ConfigError("compress_filters: filter length " + std::to_string(F) + " is odd");
  const std::size_t a = F / 2 - 1, b = F / 2;
  Tensor out({N, C});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) out.at(n, c) = (filters.at(n, a, c) + filters.at(n, b, c)) / 2.0;
  return out;
}

inline CompressedFilterBank compress_filters(const DecoderView& view, int layer) {
  if (layer != 1 && layer != 5 && layer != 8)
    throw ParameterError("compress_filters: layer must be 1, 5 or 8, got " + std::to_string(layer));
  CompressedFilterBank bank;
  bank.layer = layer;
  if (layer == 1) {
    bank.residual = compress_temporal(view.stack.conv1.value);
    return bank;
  }
  const ResidualUnit& u = view.stack.unit(layer);
  bank.residual = compress_temporal(u.weight.value);
  const std::size_t N = u.weight.value.extent(0), C = u.weight.value.extent(2);
  if (u.projection) {
    bank.projection = u.projection->value.reshaped({N, C});
  } else {
    // plain identity shortcut (toy configurations without a projection)
    Tensor eye({N, C});
    for (std::size_t i = 0; i < std::min(N, C); ++i) eye.at(i, i) = 1.0;
    bank.projection = eye;
  }
  return bank;
}

inline CompressedFilterBank compress_filters(const ResTCN& model, int layer) {
  return compress_filters(decoder_view(model), layer);
}

namespace detail {

/// out(t) = sum_i bank_i * x_i(t): T×N activations to T×C.
inline Tensor weighted_primitives(const Tensor& x, const Tensor& bank) {
  const std::size_t T = x.extent(0), N = x.extent(1), C = bank.extent(1);
  if (bank.extent(0) != N) throw ConsistencyError("decoder: activation width does not match filter bank");
  Tensor out({T, C});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < N; ++i) {
      const double a = x.at(t, i);
      if (a == 0.0) continue;
      for (std::size_t c = 0; c < C; ++c) out.at(t, c) += bank.at(i, c) * a;
    }
  return out;
}

/// Block-boundary retrieval: sum_i [res_i (x_i(t) - b_i(t)) + proj_i b_i(t)].
inline Tensor retrieve(const Tensor& x, const Tensor& boundary, const CompressedFilterBank& bank) {
  require_shape(boundary, x.shape(), "decoder retrieval boundary");
  Tensor diff = x;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= boundary[i];
  return add(weighted_primitives(diff, bank.residual), weighted_primitives(boundary, *bank.projection));
}

/// Rows of `x` read by a length-1 same-padded convolution with the given stride.
inline Tensor strided_rows(const Tensor& x, int stride) {
  if (stride == 1) return x;
  const auto geo = conv_geometry(x.extent(0), 1, stride, Padding::same);
  Tensor out({geo.out_len, x.extent(1)});
  for (std::size_t o = 0; o < geo.out_len; ++o)
    for (std::size_t c = 0; c < x.extent(1); ++c)
      out.at(o, c) = x.at(o * static_cast<std::size_t>(stride) - geo.pad_front, c);
  return out;
}

inline const Tensor& recorded(const ActivationBundle& bundle, const ResTCNConfig& cfg, int layer) {
  const Tensor& x = bundle.layer(layer);
  if (x.empty()) throw DataError("decoder: layer " + std::to_string(layer) + " activations not recorded");
  require_rank(x, 2, "decoder activations");
  if (x.extent(1) != cfg.channels(layer))
    throw ConsistencyError("decoder: recorded layer " + std::to_string(layer) + " has " + std::to_string(x.extent(1)) +
                           " channels, model has " + std::to_string(cfg.channels(layer)));
  return x;
}

}  // namespace detail

/**
 * Linear decode of X_l into skeleton space at the layer's native temporal
 * extent (no mean added). Block-B layers are first retrieved to Block-A
 * channels using the recorded X_5; Block-C layers are retrieved with the
 * recorded X_8, then with X_5 sampled on the Block-C time grid.
 */
inline Tensor decode_raw(const ActivationBundle& bundle, const DecoderView& view, int layer) {
  ResTCNConfig::check_layer(layer);
  const ResTCNConfig& cfg = view.config;
  if (!bundle.input.empty() && bundle.input.extent(1) != cfg.input_dim)
    throw ConsistencyError("decoder: bundle input width does not match model");
  Tensor x = detail::recorded(bundle, cfg, layer);
  if (layer >= 8) {
    x = detail::retrieve(x, detail::recorded(bundle, cfg, 8), compress_filters(view, 8));
  }
  if (layer >= 5) {
    Tensor boundary = detail::recorded(bundle, cfg, 5);
    if (layer >= 8) boundary = detail::strided_rows(boundary, cfg.stride(8));
    x = detail::retrieve(x, boundary, compress_filters(view, 5));
  }
  return detail::weighted_primitives(x, compress_filters(view, 1).residual);
}

inline Tensor decode_raw(const ActivationBundle& bundle, const ResTCN& model, int layer) {
  return decode_raw(bundle, decoder_view(model), layer);
}

/// Piecewise-linear resampling with both end frames pinned.
inline Tensor upsample_linear(const Tensor& seq, std::size_t target) {
  require_rank(seq, 2, "upsample_linear");
  const std::size_t n = seq.extent(0), D = seq.extent(1);
  if (n < 2) throw DataError("upsample_linear: need at least 2 frames, got " + std::to_string(n));
  if (target < n) throw ParameterError("upsample_linear: target length shorter than input");
  if (target == n) return seq;
  Tensor out({target, D});
  const std::size_t span = target - 1, knots = n - 1;
  for (std::size_t k = 0; k < target; ++k) {
    const std::size_t num = k * knots;
    const std::size_t i = num / span;
    const double frac = static_cast<double>(num % span) / static_cast<double>(span);
    for (std::size_t d = 0; d < D; ++d) {
      const double a = seq.at(i, d);
      out.at(k, d) = frac == 0.0 ? a : a + frac * (seq.at(i + 1, d) - a);
    }
  }
  return out;
}

struct DecodedSequence {
  Tensor frames;  // T×D
  int layer = 0;
  std::size_t sample_id = 0;
  bool mean_added = false;
};

/// decode_raw, up-sampled to the input length, plus the mean skeleton on every frame.
inline DecodedSequence decode(const ActivationBundle& bundle, const DecoderView& view, int layer,
                              const MeanSkeleton& mean) {
  Tensor raw = decode_raw(bundle, view, layer);
  if (mean.dims() != raw.extent(1)) throw ConsistencyError("decoder: mean skeleton width does not match model input");
  const std::size_t T = bundle.input.empty() ? view.config.length(1, raw.extent(0)) : bundle.input.extent(0);
  if (raw.extent(0) < T) raw = upsample_linear(raw, T);
  for (std::size_t t = 0; t < raw.extent(0); ++t)
    for (std::size_t d = 0; d < raw.extent(1); ++d) raw.at(t, d) += mean.values[d];
  return {std::move(raw), layer, bundle.sample_id, true};
}

inline DecodedSequence decode(const ActivationBundle& bundle, const ResTCN& model, int layer, const MeanSkeleton& mean) {
  return decode(bundle, decoder_view(model), layer, mean);
}

/// First-layer filter `filter_id` rendered as f_1 skeleton frames around the mean pose.
inline SkeletonSequence filter_to_skeleton(const DecoderView& view, std::size_t filter_id, const MeanSkeleton& mean,
                                           std::shared_ptr<const SkeletonLayout> layout) {
  const Tensor& w = view.stack.conv1.value;
  if (filter_id >= w.extent(0))
    throw ParameterError("filter_to_skeleton: filter " + std::to_string(filter_id) + " out of range");
  const std::size_t F = w.extent(1), D = w.extent(2);
  if (mean.dims() != D) throw ConsistencyError("filter_to_skeleton: mean skeleton width does not match model input");
  if (layout && layout->dims() != D) throw ConsistencyError("filter_to_skeleton: layout width does not match model input");
  SkeletonSequence s;
  s.name = "filter" + std::to_string(filter_id);
  s.layout = std::move(layout);
  s.frames = Tensor({F, D});
  for (std::size_t k = 0; k < F; ++k)
    for (std::size_t d = 0; d < D; ++d) s.frames.at(k, d) = w.at(filter_id, k, d) + mean.values[d];
  return s;
}

}  // namespace tcnscope

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tcnscope/batchnorm.hpp"
#include "tcnscope/conv1d.hpp"
#include "tcnscope/layers.hpp"
#include "tcnscope/tensor.hpp"

namespace tcnscope {

/// Number of activation layers: the first convolution plus nine residual units.
inline constexpr int kNumLayers = 10;

/**
 * Res-TCN architecture: layer 1 is a plain convolution, layers 2..10 are
 * residual units grouped in blocks A (2-4), B (5-7) and C (8-10). Blocks B
 * and C open with a stride-2 unit whose shortcut is a length-1 projection.
 */
struct ResTCNConfig {
  std::size_t input_dim = 120;
  std::size_t num_classes = 60;
  std::array<std::size_t, 3> block_channels{64, 128, 256};
  std::size_t first_filter_len = 8;
  std::size_t unit_filter_len = 8;
  double dropout = 0.5;
  /// When false, layers 5 and 8 keep stride 1 (toy configurations only).
  bool downsample = true;

  void validate() const {
    if (input_dim == 0 || num_classes == 0) throw ConfigError("restcn: input_dim and num_classes must be positive");
    for (auto c : block_channels)
      if (c == 0) throw ConfigError("restcn: block channels must be positive");
    if (first_filter_len == 0 || first_filter_len % 2 != 0)
      throw ConfigError("restcn: first filter length must be even and positive, got " +
                        std::to_string(first_filter_len));
    if (unit_filter_len == 0) throw ConfigError("restcn: unit filter length must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("restcn: dropout must lie in [0, 1)");
  }

  static void check_layer(int layer) {
    if (layer < 1 || layer > kNumLayers) throw ParameterError("layer must lie in [1, 10], got " + std::to_string(layer));
  }

  /// Filter count N_l of layer l.
  std::size_t channels(int layer) const {
    check_layer(layer);
    return block_channels[layer <= 4 ? 0 : (layer <= 7 ? 1 : 2)];
  }

  /// Input channel count of layer l.
  std::size_t in_channels(int layer) const { return layer == 1 ? input_dim : channels(layer - 1); }

  std::size_t filter_len(int layer) const { return layer == 1 ? first_filter_len : unit_filter_len; }

  int stride(int layer) const { return downsample && (layer == 5 || layer == 8) ? 2 : 1; }

  bool has_projection(int layer) const {
    return layer > 1 && (stride(layer) != 1 || channels(layer) != in_channels(layer));
  }

  /// Temporal extent of X_l for an input of length T.
  std::size_t length(int layer, std::size_t T) const {
    check_layer(layer);
    std::size_t t = T;
    for (int l = 2; l <= layer; ++l) t = conv_geometry(t, filter_len(l), stride(l), Padding::same).out_len;
    return t;
  }
};

/// One residual unit: X_l = shortcut(X_{l-1}) + W_l * dropout(relu(bn(X_{l-1}))).
struct ResidualUnit {
  int layer = 0;
  int stride = 1;
  BatchNormState bn;
  Parameter weight;
  std::optional<Parameter> projection;
};

struct UnitCache {
  Tensor input;
  BatchNormCache bn;
  Tensor normalized;
  DropoutMask drop;
  Tensor branch_input;
};

/// The convolutional trunk shared by single- and two-stream models.
struct Stack {
  Parameter conv1;
  std::vector<ResidualUnit> units;  // units[l - 2] is layer l

  ResidualUnit& unit(int layer) { return units.at(static_cast<std::size_t>(layer - 2)); }
  const ResidualUnit& unit(int layer) const { return units.at(static_cast<std::size_t>(layer - 2)); }

  void collect(std::vector<Parameter*>& out) {
    out.push_back(&conv1);
    for (auto& u : units) {
      out.push_back(&u.bn.scale);
      out.push_back(&u.bn.shift);
      out.push_back(&u.weight);
      if (u.projection) out.push_back(&*u.projection);
    }
  }

  std::vector<BatchNormState*> norms() {
    std::vector<BatchNormState*> out;
    for (auto& u : units) out.push_back(&u.bn);
    return out;
  }
};

struct StackCache {
  Tensor input;
  std::array<Tensor, kNumLayers> outputs;  // outputs[l - 1] is X_l, B×T_l×N_l
  std::array<UnitCache, kNumLayers - 1> units;
};

/// He-normal initialization: zero mean, variance 2 / fan_in.
inline Tensor he_normal(Tensor::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

inline Stack build_stack(const ResTCNConfig& cfg, std::mt19937_64& rng, const std::string& prefix) {
  Stack s;
  const std::size_t f1 = cfg.first_filter_len;
  s.conv1 = Parameter(prefix + "conv1", he_normal({cfg.channels(1), f1, cfg.input_dim}, f1 * cfg.input_dim, rng), true);
  for (int l = 2; l <= kNumLayers; ++l) {
    ResidualUnit u;
    u.layer = l;
    u.stride = cfg.stride(l);
    const std::size_t cin = cfg.in_channels(l), cout = cfg.channels(l), f = cfg.unit_filter_len;
    const std::string name = prefix + "unit" + std::to_string(l);
    u.bn = BatchNormState::create(cin, name + ".bn");
    u.weight = Parameter(name + ".conv", he_normal({cout, f, cin}, f * cin, rng), true);
    if (cfg.has_projection(l)) u.projection = Parameter(name + ".proj", he_normal({cout, 1, cin}, cin, rng), true);
    s.units.push_back(std::move(u));
  }
  return s;
}

inline Tensor unit_forward(ResidualUnit& u, const Tensor& x, Mode mode, double drop_p, std::uint64_t seed,
                           UnitCache& cache) {
  cache.input = x;
  cache.normalized = batchnorm(x, u.bn, mode, &cache.bn);
  cache.branch_input = dropout(relu(cache.normalized), drop_p, mode, seed, &cache.drop);
  Tensor out = conv1d(cache.branch_input, u.weight.value, u.stride, Padding::same);
  if (u.projection) {
    add_inplace(out, conv1d(x, u.projection->value, u.stride, Padding::same));
  } else {
    add_inplace(out, x);
  }
  return out;
}

/// Accumulates the unit's parameter gradients and returns dL/dX_{l-1}.
inline Tensor unit_backward(ResidualUnit& u, const UnitCache& cache, const Tensor& grad) {
  auto conv = conv1d_backward(cache.branch_input, u.weight.value, grad, u.stride, Padding::same);
  add_inplace(u.weight.grad, conv.filters);
  Tensor g = dropout_backward(std::move(conv.input), cache.drop);
  g = relu_backward(cache.normalized, std::move(g));
  Tensor dx = batchnorm_backward(g, u.bn, cache.bn);
  if (u.projection) {
    auto proj = conv1d_backward(cache.input, u.projection->value, grad, u.stride, Padding::same);
    add_inplace(u.projection->grad, proj.filters);
    add_inplace(dx, proj.input);
  } else {
    add_inplace(dx, grad);
  }
  return dx;
}

inline Tensor first_layer_forward(const Stack& s, const Tensor& x) { return conv1d(x, s.conv1.value, 1, Padding::same); }

/// Recorded activations of one sample from one forward pass.
struct ActivationBundle {
  std::size_t sample_id = 0;
  Tensor input;                           // X_0, T×D
  std::array<Tensor, kNumLayers> layers;  // layers[l - 1] is X_l, T_l×N_l

  const Tensor& layer(int l) const {
    ResTCNConfig::check_layer(l);
    return layers[static_cast<std::size_t>(l - 1)];
  }
  Tensor& layer(int l) {
    ResTCNConfig::check_layer(l);
    return layers[static_cast<std::size_t>(l - 1)];
  }
};

inline std::vector<ActivationBundle> split_bundles(const StackCache& cache, std::span<const std::size_t> ids) {
  const std::size_t B = cache.input.extent(0);
  std::vector<ActivationBundle> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    out[b].sample_id = b < ids.size() ? ids[b] : b;
    out[b].input = cache.input.slice(b);
    for (int l = 1; l <= kNumLayers; ++l) out[b].layer(l) = cache.outputs[static_cast<std::size_t>(l - 1)].slice(b);
  }
  return out;
}

struct ForwardOptions {
  Mode mode = Mode::eval;
  bool record = false;
  std::uint64_t dropout_seed = 0;
  /// Sample ids stamped on recorded bundles; defaults to batch positions.
  std::span<const std::size_t> sample_ids = {};
};

struct ForwardResult {
  Tensor logits;
  std::vector<ActivationBundle> bundles;
};

struct Head {
  Parameter weight;
  Parameter bias;
};

inline Head build_head(std::size_t width, std::size_t classes, std::mt19937_64& rng, const std::string& prefix = "") {
  return {Parameter(prefix + "head.weight", he_normal({width, classes}, width, rng)),
          Parameter(prefix + "head.bias", Tensor({classes}, 0.0))};
}

class ResTCN {
 public:
  static ResTCN build(const ResTCNConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ResTCN m;
    m.config_ = cfg;
    std::mt19937_64 rng(seed);
    m.stack_ = build_stack(cfg, rng, "");
    m.head_ = build_head(cfg.channels(kNumLayers), cfg.num_classes, rng);
    return m;
  }

  const ResTCNConfig& config() const { return config_; }
  const ResTCNConfig& config_base() const { return config_; }
  Stack& stack() { return stack_; }
  const Stack& stack() const { return stack_; }
  Head& head() { return head_; }
  const Head& head() const { return head_; }

  /// X_1 = W_1 * X_0; X_l = unit_l(X_{l-1}); logits = dense(GAP(X_10)).
  ForwardResult forward(const Tensor& batch, const ForwardOptions& opt = {}) {
    require_rank(batch, 3, "restcn input");
    if (batch.extent(2) != config_.input_dim)
      throw ShapeError("restcn: input width " + std::to_string(batch.extent(2)) + " != configured " +
                       std::to_string(config_.input_dim));
    if (batch.extent(1) < config_.first_filter_len)
      throw DataError("restcn: sequence length " + std::to_string(batch.extent(1)) + " shorter than first filter");
    StackCache& c = cache_;
    c.input = batch;
    c.outputs[0] = first_layer_forward(stack_, batch);
    for (int l = 2; l <= kNumLayers; ++l) {
      const auto i = static_cast<std::size_t>(l - 1);
      c.outputs[i] = unit_forward(stack_.unit(l), c.outputs[i - 1], opt.mode, config_.dropout,
                                  mix_seed(opt.dropout_seed, static_cast<std::uint64_t>(l)), c.units[i - 1]);
    }
    pooled_ = global_average_pool(c.outputs[kNumLayers - 1]);
    ForwardResult r{dense(pooled_, head_.weight.value, head_.bias.value), {}};
    if (opt.record) r.bundles = split_bundles(c, opt.sample_ids);
    return r;
  }

  /// Back-propagates dL/dlogits through the last forward pass.
  Tensor backward(const Tensor& grad_logits) {
    Tensor g = dense_backward(pooled_, head_.weight, head_.bias, grad_logits);
    g = global_average_pool_backward(g, cache_.outputs[kNumLayers - 1].extent(1));
    for (int l = kNumLayers; l >= 2; --l) g = unit_backward(stack_.unit(l), cache_.units[static_cast<std::size_t>(l - 2)], g);
    auto conv = conv1d_backward(cache_.input, stack_.conv1.value, g, 1, Padding::same);
    add_inplace(stack_.conv1.grad, conv.filters);
    return conv.input;
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    stack_.collect(out);
    out.push_back(&head_.weight);
    out.push_back(&head_.bias);
    return out;
  }

  std::vector<BatchNormState*> norms() { return stack_.norms(); }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
  }

 private:
  ResTCNConfig config_;
  Stack stack_;
  Head head_;
  StackCache cache_;
  Tensor pooled_;
};

/// |x_l^(i)(t)| per requested filter; result[k][t] belongs to filter_ids[k].
inline std::vector<std::vector<double>> response_trace(const ActivationBundle& bundle, int layer,
                                                       std::span<const std::size_t> filter_ids) {
  ResTCNConfig::check_layer(layer);
  const Tensor& x = bundle.layer(layer);
  if (x.empty()) throw DataError("response_trace: layer " + std::to_string(layer) + " not recorded");
  std::vector<std::vector<double>> out;
  for (auto id : filter_ids) {
    if (id >= x.extent(1))
      throw ParameterError("response_trace: filter " + std::to_string(id) + " out of range for layer " +
                           std::to_string(layer));
    std::vector<double> trace(x.extent(0));
    for (std::size_t t = 0; t < trace.size(); ++t) trace[t] = std::abs(x.at(t, id));
    out.push_back(std::move(trace));
  }
  return out;
}

}  // namespace tcnscope

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tcnscope/batchnorm.hpp"
#include "tcnscope/conv1d.hpp"
#include "tcnscope/layers.hpp"
#include "tcnscope/restcn.hpp"
#include "tcnscope/tensor.hpp"

namespace tcnscope {

/// Input dimensions kept by the targeted-attention stream.
struct MaskSpec {
  std::vector<std::size_t> kept_dims;
  std::string provenance;

  void validate(std::size_t input_dim) const {
    if (kept_dims.empty()) throw ConfigError("mask: no kept dimensions");
    for (std::size_t i = 0; i < kept_dims.size(); ++i) {
      if (kept_dims[i] >= input_dim)
        throw ConfigError("mask: dimension " + std::to_string(kept_dims[i]) + " outside input width " +
                          std::to_string(input_dim));
      if (i && kept_dims[i] <= kept_dims[i - 1]) throw ConfigError("mask: dimensions must be strictly increasing");
    }
  }

  static MaskSpec all(std::size_t input_dim, std::string provenance = "all dimensions") {
    MaskSpec m;
    for (std::size_t d = 0; d < input_dim; ++d) m.kept_dims.push_back(d);
    m.provenance = std::move(provenance);
    return m;
  }
};

/// Zeroes every column of a B×T×D batch outside the mask.
inline Tensor mask_input(const Tensor& batch, const MaskSpec& mask) {
  require_rank(batch, 3, "mask_input");
  const std::size_t D = batch.extent(2);
  mask.validate(D);
  std::vector<char> keep(D, 0);
  for (auto d : mask.kept_dims) keep[d] = 1;
  Tensor out = batch;
  const std::size_t rows = batch.extent(0) * batch.extent(1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t d = 0; d < D; ++d)
      if (!keep[d]) out[r * D + d] = 0.0;
  return out;
}

enum class PipeActivation { relu_only, bn_relu };

/// zero: the model starts as two disjoint streams; he: same draw as every other convolution.
enum class PipeInit { zero, he };

struct MSResTCNConfig {
  ResTCNConfig base;
  std::size_t pipe_filter_len = 1;
  PipeActivation pipe_activation = PipeActivation::relu_only;
  PipeInit pipe_init = PipeInit::zero;
  MaskSpec mask;

  void validate() const {
    base.validate();
    if (pipe_filter_len == 0) throw ConfigError("msnet: pipe filter length must be positive");
    mask.validate(base.input_dim);
  }
};

/// Even layers pipe the TA stream into the main stream; odd layers the reverse.
inline bool pipe_feeds_main(int layer) { return layer % 2 == 0; }

/// Pipe of merge layer l: relu([bn](W^P_l * source)).
struct Pipe {
  int layer = 0;
  Parameter weight;
  std::optional<BatchNormState> bn;
};

struct PipeCache {
  Tensor source;
  Tensor pre_activation;
  BatchNormCache bn;
};

inline Tensor pipe_forward(Pipe& p, const Tensor& source, Mode mode, PipeCache& cache) {
  cache.source = source;
  Tensor h = conv1d(source, p.weight.value, 1, Padding::same);
  if (p.bn) h = batchnorm(h, *p.bn, mode, &cache.bn);
  cache.pre_activation = h;
  return relu(std::move(h));
}

// The ReLU here passes gradient at exactly zero so zero-initialized pipes can start learning.
inline Tensor pipe_backward(Pipe& p, const PipeCache& cache, const Tensor& grad) {
  Tensor g = grad;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (cache.pre_activation[i] < 0.0) g[i] = 0.0;
  if (p.bn) g = batchnorm_backward(g, *p.bn, cache.bn);
  auto conv = conv1d_backward(cache.source, p.weight.value, g, 1, Padding::same);
  add_inplace(p.weight.grad, conv.filters);
  return conv.input;
}

struct MSForwardResult {
  Tensor logits;
  std::vector<ActivationBundle> bundles;     // main stream
  std::vector<ActivationBundle> ta_bundles;  // targeted-attention stream
  /// Per-layer computation order, e.g. "ta:2", "main:2"; filled when recording.
  std::vector<std::string> order;
};

/**
 * Two Res-TCN stacks (main on the raw input, TA on the masked input) fused by
 * pipes at merge layers 2..10, with a shared GAP+softmax head over the
 * channel concatenation of both final activations.
 */
class MSResTCN {
 public:
  static MSResTCN build(const MSResTCNConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    MSResTCN m;
    m.config_ = cfg;
    std::mt19937_64 rng(seed);
    m.main_ = build_stack(cfg.base, rng, "main.");
    m.ta_ = build_stack(cfg.base, rng, "ta.");
    for (int l = 2; l <= kNumLayers; ++l) {
      const std::size_t n = cfg.base.channels(l), f = cfg.pipe_filter_len;
      Pipe p;
      p.layer = l;
      Tensor w = he_normal({n, f, n}, f * n, rng);
      if (cfg.pipe_init == PipeInit::zero) w.fill(0.0);
      p.weight = Parameter("pipe" + std::to_string(l) + ".conv", std::move(w), true);
      if (cfg.pipe_activation == PipeActivation::bn_relu) p.bn = BatchNormState::create(n, "pipe" + std::to_string(l) + ".bn");
      m.pipes_.push_back(std::move(p));
    }
    m.head_ = build_head(2 * cfg.base.channels(kNumLayers), cfg.base.num_classes, rng);
    return m;
  }

  const MSResTCNConfig& config() const { return config_; }
  const ResTCNConfig& config_base() const { return config_.base; }
  Stack& main_stack() { return main_; }
  const Stack& main_stack() const { return main_; }
  Stack& ta_stack() { return ta_; }
  const Stack& ta_stack() const { return ta_; }
  Pipe& pipe(int layer) { return pipes_.at(static_cast<std::size_t>(layer - 2)); }
  const Pipe& pipe(int layer) const { return pipes_.at(static_cast<std::size_t>(layer - 2)); }
  Head& head() { return head_; }
  const Head& head() const { return head_; }

  MSForwardResult forward(const Tensor& batch, const ForwardOptions& opt = {}) {
    const ResTCNConfig& base = config_.base;
    require_rank(batch, 3, "msnet input");
    if (batch.extent(2) != base.input_dim) throw ShapeError("msnet: input width does not match configuration");
    if (batch.extent(1) < base.first_filter_len)
      throw DataError("msnet: sequence length " + std::to_string(batch.extent(1)) + " shorter than first filter");
    MSForwardResult r;
    auto note = [&](const char* what, int l) {
      if (opt.record) r.order.push_back(std::string(what) + ":" + std::to_string(l));
    };
    main_cache_.input = batch;
    ta_cache_.input = mask_input(batch, config_.mask);
    main_cache_.outputs[0] = first_layer_forward(main_, main_cache_.input);
    note("main", 1);
    ta_cache_.outputs[0] = first_layer_forward(ta_, ta_cache_.input);
    note("ta", 1);
    for (int l = 2; l <= kNumLayers; ++l) {
      const auto i = static_cast<std::size_t>(l - 1);
      const auto main_seed = mix_seed(opt.dropout_seed, static_cast<std::uint64_t>(l));
      const auto ta_seed = mix_seed(opt.dropout_seed, static_cast<std::uint64_t>(100 + l));
      auto run_main = [&] {
        main_cache_.outputs[i] = unit_forward(main_.unit(l), main_cache_.outputs[i - 1], opt.mode, base.dropout,
                                              main_seed, main_cache_.units[i - 1]);
        note("main", l);
      };
      auto run_ta = [&] {
        ta_cache_.outputs[i] =
            unit_forward(ta_.unit(l), ta_cache_.outputs[i - 1], opt.mode, base.dropout, ta_seed, ta_cache_.units[i - 1]);
        note("ta", l);
      };
      PipeCache& pc = pipe_cache_[i - 1];
      if (pipe_feeds_main(l)) {
        run_ta();
        run_main();
        add_inplace(main_cache_.outputs[i], pipe_forward(pipe(l), ta_cache_.outputs[i], opt.mode, pc));
        note("pipe->main", l);
      } else {
        run_main();
        run_ta();
        add_inplace(ta_cache_.outputs[i], pipe_forward(pipe(l), main_cache_.outputs[i], opt.mode, pc));
        note("pipe->ta", l);
      }
    }
    const auto last = static_cast<std::size_t>(kNumLayers - 1);
    pooled_ = global_average_pool(concat_channels(main_cache_.outputs[last], ta_cache_.outputs[last]));
    r.logits = dense(pooled_, head_.weight.value, head_.bias.value);
    if (opt.record) {
      r.bundles = split_bundles(main_cache_, opt.sample_ids);
      r.ta_bundles = split_bundles(ta_cache_, opt.sample_ids);
    }
    return r;
  }

  /// Reverse of the forward order: at each layer the stream computed second is differentiated first.
  void backward(const Tensor& grad_logits) {
    Tensor g = dense_backward(pooled_, head_.weight, head_.bias, grad_logits);
    const auto last = static_cast<std::size_t>(kNumLayers - 1);
    const std::size_t T = main_cache_.outputs[last].extent(1);
    const std::size_t n = config_.base.channels(kNumLayers);
    Tensor gcat = global_average_pool_backward(g, T);
    Tensor gm({gcat.extent(0), T, n}), gt({gcat.extent(0), T, n});
    for (std::size_t r = 0; r < gcat.extent(0) * T; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        gm[r * n + c] = gcat[r * 2 * n + c];
        gt[r * n + c] = gcat[r * 2 * n + n + c];
      }
    for (int l = kNumLayers; l >= 2; --l) {
      const auto u = static_cast<std::size_t>(l - 2);
      if (pipe_feeds_main(l)) {
        add_inplace(gt, pipe_backward(pipe(l), pipe_cache_[u], gm));
        gm = unit_backward(main_.unit(l), main_cache_.units[u], gm);
        gt = unit_backward(ta_.unit(l), ta_cache_.units[u], gt);
      } else {
        add_inplace(gm, pipe_backward(pipe(l), pipe_cache_[u], gt));
        gt = unit_backward(ta_.unit(l), ta_cache_.units[u], gt);
        gm = unit_backward(main_.unit(l), main_cache_.units[u], gm);
      }
    }
    auto cm = conv1d_backward(main_cache_.input, main_.conv1.value, gm, 1, Padding::same);
    add_inplace(main_.conv1.grad, cm.filters);
    auto ct = conv1d_backward(ta_cache_.input, ta_.conv1.value, gt, 1, Padding::same);
    add_inplace(ta_.conv1.grad, ct.filters);
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    main_.collect(out);
    ta_.collect(out);
    for (auto& p : pipes_) {
      out.push_back(&p.weight);
      if (p.bn) {
        out.push_back(&p.bn->scale);
        out.push_back(&p.bn->shift);
      }
    }
    out.push_back(&head_.weight);
    out.push_back(&head_.bias);
    return out;
  }

  std::vector<BatchNormState*> norms() {
    auto out = main_.norms();
    for (auto* n : ta_.norms()) out.push_back(n);
    for (auto& p : pipes_)
      if (p.bn) out.push_back(&*p.bn);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
  }

 private:
  MSResTCNConfig config_;
  Stack main_;
  Stack ta_;
  std::vector<Pipe> pipes_;  // pipes_[l - 2] serves layer l
  Head head_;
  StackCache main_cache_;
  StackCache ta_cache_;
  std::array<PipeCache, kNumLayers - 1> pipe_cache_;
  Tensor pooled_;
};

}  // namespace tcnscope

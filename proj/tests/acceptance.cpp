// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--cli PATH] [criterion ...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <unistd.h>

#include "decoder_oracle.hpp"
#include "oracles.hpp"
#include "tcnscope/batchnorm.hpp"
#include "tcnscope/conv1d.hpp"
#include "tcnscope/dataio/ntu.hpp"
#include "tcnscope/fmd.hpp"
#include "tcnscope/layers.hpp"
#include "tcnscope/msnet.hpp"
#include "tcnscope/run.hpp"

using namespace tcnscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 3) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

fs::path scratch_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("tcnscope_acceptance_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------- 1

struct GradCheck {
  double error = 0.0;
  std::size_t screened = 0;
  std::size_t total = 0;
};

/**
 * Central differences at step h compared to the analytic gradient. Elements
 * whose h and h/2 differences disagree sit within one step of a ReLU kink;
 * they are left out of the error and counted.
 */
GradCheck check_gradient(Tensor& x, const Tensor& analytic, const std::function<double()>& f, double h = 1e-3) {
  const Tensor g = oracle::numeric_gradient(x, f, h);
  const Tensor half = oracle::numeric_gradient(x, f, h / 2);
  double scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) scale = std::max(scale, std::abs(half[i]));
  std::vector<double> a, n;
  GradCheck out;
  out.total = g.size();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g[i] - half[i]) > 1e-6 * (scale + 1e-3)) {
      ++out.screened;
      continue;
    }
    a.push_back(analytic[i]);
    n.push_back(g[i]);
  }
  if (!a.empty()) out.error = oracle::relative_error(Tensor({a.size()}, a), Tensor({n.size()}, n));
  return out;
}

struct GradTally {
  double worst = 0.0;
  std::size_t screened = 0;
  std::size_t total = 0;
  std::size_t checks = 0;
  std::string worst_name;

  void add(const GradCheck& c, const std::string& name) {
    ++checks;
    screened += c.screened;
    total += c.total;
    if (c.error >= worst) {
      worst = c.error;
      worst_name = name;
    }
  }
};

void gradient_ops(GradTally& tally) {
  std::mt19937_64 rng(101);
  for (int stride : {1, 2, 3})
    for (Padding pad : {Padding::same, Padding::valid}) {
      auto x = oracle::random_tensor({2, 9, 3}, rng);
      auto w = oracle::random_tensor({4, 3, 3}, rng);
      auto probe = oracle::random_tensor(conv1d(x, w, stride, pad).shape(), rng);
      auto loss = [&] { return oracle::weighted_sum(conv1d(x, w, stride, pad), probe); };
      auto g = conv1d_backward(x, w, probe, stride, pad);
      tally.add(check_gradient(x, g.input, loss), "conv1d input");
      tally.add(check_gradient(w, g.filters, loss), "conv1d filters");
    }
  for (Mode mode : {Mode::train, Mode::eval}) {
    auto x = oracle::random_tensor({2, 6, 4}, rng);
    auto st = BatchNormState::create(4, "bn");
    st.scale.value = oracle::random_tensor({4}, rng, 0.5, 1.5);
    st.shift.value = oracle::random_tensor({4}, rng);
    st.running_var = oracle::random_tensor({4}, rng, 0.5, 2.0);
    auto probe = oracle::random_tensor({2, 6, 4}, rng);
    auto loss = [&] {
      auto copy = st;
      return oracle::weighted_sum(batchnorm(x, copy, mode), probe);
    };
    BatchNormCache cache;
    auto copy = st;
    batchnorm(x, copy, mode, &cache);
    copy.scale.zero_grad();
    copy.shift.zero_grad();
    auto dx = batchnorm_backward(probe, copy, cache);
    tally.add(check_gradient(x, dx, loss), "batchnorm input");
    tally.add(check_gradient(st.scale.value, copy.scale.grad, loss), "batchnorm scale");
    tally.add(check_gradient(st.shift.value, copy.shift.grad, loss), "batchnorm shift");
  }
  {
    auto x = oracle::random_tensor({3, 4, 5}, rng);
    auto probe = oracle::random_tensor(x.shape(), rng);
    auto loss = [&] { return oracle::weighted_sum(relu(x), probe); };
    tally.add(check_gradient(x, relu_backward(x, probe), loss), "relu");
  }
  {
    auto x = oracle::random_tensor({3, 4, 5}, rng);
    auto probe = oracle::random_tensor(x.shape(), rng);
    DropoutMask mask;
    dropout(x, 0.5, Mode::train, 77, &mask);
    auto loss = [&] { return oracle::weighted_sum(dropout(x, 0.5, Mode::train, 77), probe); };
    tally.add(check_gradient(x, dropout_backward(probe, mask), loss), "dropout");
  }
  {
    auto x = oracle::random_tensor({2, 7, 3}, rng);
    auto probe = oracle::random_tensor({2, 3}, rng);
    auto loss = [&] { return oracle::weighted_sum(global_average_pool(x), probe); };
    tally.add(check_gradient(x, global_average_pool_backward(probe, 7), loss), "global average pool");
  }
  {
    auto x = oracle::random_tensor({3, 5}, rng);
    Parameter w("w", oracle::random_tensor({5, 4}, rng)), b("b", oracle::random_tensor({4}, rng));
    std::vector<int> y{2, 0, 3};
    auto loss = [&] { return dense_softmax_xent(x, w, b, y).loss; };
    auto fwd = dense_softmax_xent(x, w, b, y);
    auto dx = dense_softmax_xent_backward(x, w, b, fwd, y);
    tally.add(check_gradient(x, dx, loss), "dense+softmax input");
    tally.add(check_gradient(w.value, w.grad, loss), "dense weight");
    tally.add(check_gradient(b.value, b.grad, loss), "dense bias");
  }
}

ResTCNConfig tiny_base() {
  ResTCNConfig cfg;
  cfg.input_dim = 4;
  cfg.num_classes = 3;
  cfg.block_channels = {2, 3, 4};
  cfg.dropout = 0.5;
  return cfg;
}

template <class Model>
void gradient_model(Model& m, std::mt19937_64& rng, const std::string& tag, GradTally& tally) {
  for (auto* bn : m.norms()) bn->shift.value = oracle::random_tensor(bn->shift.value.shape(), rng, -0.2, 0.2);
  auto x = oracle::random_tensor({3, 8, 4}, rng);
  std::vector<int> y{0, 2, 1};
  ForwardOptions opt;
  opt.mode = Mode::train;
  opt.dropout_seed = 5;
  auto loss = [&] { return softmax_xent(m.forward(x, opt).logits, y).loss; };
  auto xent = softmax_xent(m.forward(x, opt).logits, y);
  m.zero_grad();
  const Tensor grad_logits = softmax_xent_backward(xent.probs, y);
  if constexpr (std::is_same_v<decltype(m.backward(grad_logits)), Tensor>) {
    Tensor dx = m.backward(grad_logits);
    tally.add(check_gradient(x, dx, loss), tag + " input");
  } else {
    m.backward(grad_logits);
  }
  for (auto* p : m.parameters()) tally.add(check_gradient(p->value, p->grad, loss), tag + " " + p->name);
}

Outcome criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  GradTally tally;
  gradient_ops(tally);
  std::mt19937_64 rng(202);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto m = ResTCN::build(tiny_base(), seed);
    gradient_model(m, rng, "res-tcn", tally);
  }
  for (auto act : {PipeActivation::relu_only, PipeActivation::bn_relu})
    for (std::uint64_t seed : {4u, 5u}) {
      MSResTCNConfig cfg;
      cfg.base = tiny_base();
      cfg.mask.kept_dims = {1, 3};
      cfg.pipe_activation = act;
      cfg.pipe_init = PipeInit::he;
      auto m = MSResTCN::build(cfg, seed);
      gradient_model(m, rng, "ms-res-tcn", tally);
    }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double screened_fraction = static_cast<double>(tally.screened) / static_cast<double>(tally.total);
  Outcome o;
  o.pass = tally.worst < 1e-4 && secs < 60.0 && screened_fraction < 0.02;
  o.detail = std::to_string(tally.checks) + " checks, worst relative error " + fmt(tally.worst) + " (" +
             tally.worst_name + "), " + std::to_string(tally.screened) + "/" + std::to_string(tally.total) +
             " elements within one step of a ReLU kink excluded, " + fmt(secs, 3) + " s";
  return o;
}

// ---------------------------------------------------------------- 2

Outcome criterion_conv_oracle() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> pick(1, 6);
  double worst = 0.0;
  int strided = 0, same = 0, valid = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t B = pick(rng) % 3 + 1, C = pick(rng), N = pick(rng), F = pick(rng) + 1;
    const int stride = c % 3 + 1;
    const bool use_same = c % 2 == 0;
    const std::size_t T = F + static_cast<std::size_t>(pick(rng) * 3);
    auto x = oracle::random_tensor({B, T, C}, rng);
    auto w = oracle::random_tensor({N, F, C}, rng);
    const Tensor y = conv1d(x, w, stride, use_same ? Padding::same : Padding::valid);
    const Tensor ref = oracle::conv1d(x, w, stride, use_same);
    if (y.shape() != ref.shape()) return {false, "shape mismatch in case " + std::to_string(c)};
    for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
    strided += stride > 1;
    (use_same ? same : valid) += 1;
  }
  return {worst <= 1e-12, "100 cases (" + std::to_string(strided) + " strided, " + std::to_string(same) + " same, " +
                              std::to_string(valid) + " valid), max abs difference " + fmt(worst)};
}

// ---------------------------------------------------------------- 3

Outcome criterion_residual_identity() {
  ResTCNConfig cfg = tiny_base();
  cfg.block_channels = {4, 4, 4};
  cfg.downsample = false;
  std::size_t compared = 0;
  bool ok = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto m = ResTCN::build(cfg, seed);
    for (int l = 2; l <= 10; ++l) m.stack().unit(l).weight.value.fill(0.0);
    std::mt19937_64 rng(seed);
    auto x = oracle::random_tensor({2, 13, 4}, rng);
    for (Mode mode : {Mode::eval, Mode::train}) {
      ForwardOptions opt;
      opt.mode = mode;
      opt.record = true;
      for (const auto& b : m.forward(x, opt).bundles) {
        ok = ok && b.layer(10) == b.layer(1);
        ++compared;
      }
    }
  }
  return {ok, std::to_string(compared) + " recorded samples, X10 == X1 bitwise in train and eval mode"};
}

// ---------------------------------------------------------------- 4, 5

struct TinyRecording {
  ResTCN model;
  std::vector<ActivationBundle> bundles;
};

TinyRecording tiny_recording(std::uint64_t seed, std::size_t T) {
  TinyRecording r{ResTCN::build(tiny_base(), seed), {}};
  std::mt19937_64 rng(mix_seed(seed, 9));
  for (auto* bn : r.model.norms()) bn->shift.value = oracle::random_tensor(bn->shift.value.shape(), rng, -0.5, 0.5);
  ForwardOptions opt;
  opt.record = true;
  r.bundles = r.model.forward(oracle::random_tensor({2, T, 4}, rng), opt).bundles;
  return r;
}

Outcome criterion_decoder_oracle() {
  double worst[3] = {0.0, 0.0, 0.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = tiny_recording(seed + 40, 8 + seed);
    for (const auto& b : r.bundles)
      for (int l = 1; l <= 10; ++l) {
        const auto ref = oracle::reference_decode(b, r.model, l);
        const auto out = decode_raw(b, r.model, l);
        if (out.extent(0) != ref.size()) return {false, "length mismatch at layer " + std::to_string(l)};
        const int block = l <= 4 ? 0 : (l <= 7 ? 1 : 2);
        worst[block] = std::max(worst[block], oracle::max_diff(out, ref));
      }
  }
  const double all = std::max({worst[0], worst[1], worst[2]});
  return {all <= 1e-9, "20 tiny models, max abs difference: block A " + fmt(worst[0]) + ", block B " +
                           fmt(worst[1]) + ", block C " + fmt(worst[2])};
}

Outcome criterion_decoder_trivia() {
  bool mean_exact = true;
  double worst_linear = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto r = tiny_recording(seed + 70, 16);
    MeanSkeleton mean{{0.1 * static_cast<double>(seed), -0.25, 1.5, 3.0}};
    for (const auto& b : r.bundles) {
      ActivationBundle zero = b;
      for (auto& t : zero.layers) t.fill(0.0);
      for (int l = 1; l <= 10; ++l) {
        const auto d = decode(zero, r.model, l, mean);
        for (std::size_t t = 0; t < d.frames.extent(0); ++t)
          for (std::size_t c = 0; c < 4; ++c) mean_exact = mean_exact && d.frames.at(t, c) == mean.values[c];
        const auto base = decode_raw(b, r.model, l);
        for (double a : {-1.0, 0.5, 3.0}) {
          ActivationBundle sb = b;
          for (auto& t : sb.layers) t = scaled(t, a);
          const auto out = decode_raw(sb, r.model, l);
          for (std::size_t i = 0; i < out.size(); ++i) worst_linear = std::max(worst_linear, std::abs(out[i] - a * base[i]));
        }
      }
    }
  }
  return {mean_exact && worst_linear <= 1e-9,
          std::string("zero activations decode to the mean skeleton ") + (mean_exact ? "exactly" : "NOT exactly") +
              " at layers 1-10; linearity max deviation " + fmt(worst_linear)};
}

// ---------------------------------------------------------------- 6

Outcome criterion_ms_structure() {
  MSResTCNConfig cfg;
  cfg.base.input_dim = 12;
  cfg.base.num_classes = 3;
  cfg.base.block_channels = {4, 6, 8};
  cfg.mask.kept_dims = {0, 1, 2, 9, 10, 11};
  cfg.pipe_init = PipeInit::he;
  std::mt19937_64 rng(606);
  auto x = oracle::random_tensor({3, 20, 12}, rng);
  ForwardOptions opt;
  opt.record = true;

  // zero pipes against two independent trunks and a hand-built head
  auto ms = MSResTCN::build(cfg, 5);
  for (int l = 2; l <= 10; ++l) ms.pipe(l).weight.value.fill(0.0);
  auto r = ms.forward(x, opt);
  ResTCN main_ref = ResTCN::build(cfg.base, 0), ta_ref = ResTCN::build(cfg.base, 0);
  main_ref.stack() = ms.main_stack();
  ta_ref.stack() = ms.ta_stack();
  auto rm = main_ref.forward(x, opt);
  auto rt = ta_ref.forward(mask_input(x, cfg.mask), opt);
  const std::size_t T10 = rm.bundles[0].layer(10).extent(0), N = cfg.base.block_channels.back();
  Tensor pooled({3, 2 * N});
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t c = 0; c < N; ++c) {
      double sm = 0.0, st = 0.0;
      for (std::size_t t = 0; t < T10; ++t) {
        sm += rm.bundles[b].layer(10).at(t, c);
        st += rt.bundles[b].layer(10).at(t, c);
      }
      pooled.at(b, c) = sm / static_cast<double>(T10);
      pooled.at(b, N + c) = st / static_cast<double>(T10);
    }
  const Tensor ref_logits = dense(pooled, ms.head().weight.value, ms.head().bias.value);
  const bool disjoint = r.logits == ref_logits;

  // perturbing pipe l changes only the receiving stream from layer l on
  auto base = MSResTCN::build(cfg, 8);
  auto ref = base.forward(x, opt);
  bool parity = true;
  for (int l = 2; l <= 10; ++l) {
    auto m = base;
    for (auto& v : m.pipe(l).weight.value.values()) v += 0.5;
    auto p = m.forward(x, opt);
    for (std::size_t b = 0; b < 3; ++b) {
      for (int k = 1; k < l; ++k)
        parity = parity && p.bundles[b].layer(k) == ref.bundles[b].layer(k) &&
                 p.ta_bundles[b].layer(k) == ref.ta_bundles[b].layer(k);
      const bool main_moved = !(p.bundles[b].layer(l) == ref.bundles[b].layer(l));
      const bool ta_moved = !(p.ta_bundles[b].layer(l) == ref.ta_bundles[b].layer(l));
      parity = parity && main_moved == (l % 2 == 0) && ta_moved == (l % 2 == 1);
    }
  }
  std::vector<std::string> expected{"main:1", "ta:1"};
  for (int l = 2; l <= 10; ++l) {
    const auto s = std::to_string(l);
    if (l % 2 == 0) expected.insert(expected.end(), {"ta:" + s, "main:" + s, "pipe->main:" + s});
    else expected.insert(expected.end(), {"main:" + s, "ta:" + s, "pipe->ta:" + s});
  }
  const bool order = ref.order == expected;
  return {disjoint && parity && order,
          std::string("zero-pipe logits ") + (disjoint ? "equal" : "DIFFER FROM") +
              " the disjoint-streams reference; parity oracle " + (parity ? "holds" : "FAILS") +
              "; evaluation order " + (order ? "matches" : "DIFFERS")};
}

// ---------------------------------------------------------------- 7

/// Nearest class centroid over the fine dims, confusable pair only.
double centroid_oracle(const SyntheticData& data, const MaskSpec& fine, const std::vector<int>& pair) {
  const std::size_t T = data.train.front().length(), F = fine.kept_dims.size();
  std::vector<std::vector<double>> centroid(pair.size(), std::vector<double>(T * F, 0.0));
  std::vector<double> count(pair.size(), 0.0);
  for (const auto& s : data.train)
    for (std::size_t k = 0; k < pair.size(); ++k)
      if (s.label == pair[k]) {
        count[k] += 1.0;
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t i = 0; i < F; ++i) centroid[k][t * F + i] += s.frames.at(t, fine.kept_dims[i]);
      }
  for (std::size_t k = 0; k < pair.size(); ++k)
    for (auto& v : centroid[k]) v /= count[k];
  std::size_t hit = 0, n = 0;
  for (const auto& s : data.test) {
    if (std::find(pair.begin(), pair.end(), s.label) == pair.end()) continue;
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t k = 0; k < pair.size(); ++k) {
      double d = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < F; ++i) {
          const double e = s.frames.at(t, fine.kept_dims[i]) - centroid[k][t * F + i];
          d += e * e;
        }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    ++n;
    hit += pair[best] == s.label;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

double pair_accuracy(const EvalResult& r, const std::vector<int>& pair) {
  double hit = 0.0, n = 0.0;
  for (int k : pair) {
    hit += static_cast<double>(r.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)]);
    for (auto v : r.confusion[static_cast<std::size_t>(k)]) n += static_cast<double>(v);
  }
  return hit / n;
}

Outcome criterion_synthetic_refinement() {
  const auto root = scratch_dir("c7");
  double base_sum = 0.0, ms_sum = 0.0, worst_secs = 0.0, worst_centroid = 1.0;
  std::ostringstream per_seed;
  const std::vector<int> pair{0, 1};
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.run_root = root.string();
    cfg.synthetic.seed = seed;
    cfg.model.block_channels = {8, 16, 32};
    cfg.epochs = 15;
    cfg.batch_size = 32;
    const MaskSpec fine = SyntheticSpec::default_fine_dims(cfg.synthetic.joints);
    cfg.mask = to_json(fine);

    SyntheticSpec spec = cfg.synthetic;
    spec.fine_dims = fine;
    worst_centroid = std::min(worst_centroid, centroid_oracle(synth_generate(spec), fine, pair));

    auto t0 = std::chrono::steady_clock::now();
    cfg.name = "train-s" + std::to_string(seed);
    const auto base = run_training(cfg, "train");
    auto t1 = std::chrono::steady_clock::now();
    cfg.name = "refine-s" + std::to_string(seed);
    const auto ms = run_training(cfg, "refine");
    auto t2 = std::chrono::steady_clock::now();
    worst_secs = std::max({worst_secs, std::chrono::duration<double>(t1 - t0).count(),
                           std::chrono::duration<double>(t2 - t1).count()});
    const double b = pair_accuracy(base.final_test, pair), m = pair_accuracy(ms.final_test, pair);
    base_sum += b;
    ms_sum += m;
    per_seed << " s" << seed << " " << fmt(b) << "->" << fmt(m);
  }
  fs::remove_all(root);
  const double base_mean = base_sum / 3.0, ms_mean = ms_sum / 3.0, gain = ms_mean - base_mean;
  const bool band = base_mean >= 0.60 && base_mean <= 0.85;
  Outcome o;
  o.pass = band && gain >= 0.05 && worst_secs < 900.0 && worst_centroid >= 0.95;
  o.detail = "pair accuracy baseline " + fmt(base_mean) + (band ? " (in band)" : " (OUTSIDE 0.60-0.85)") +
             ", MS " + fmt(ms_mean) + ", gain " + fmt(100.0 * gain) + " points;" + per_seed.str() +
             "; centroid oracle >= " + fmt(worst_centroid) + "; slowest run " + fmt(worst_secs, 3) + " s";
  return o;
}

// ---------------------------------------------------------------- 8

Outcome criterion_ntu_parser() {
  const fs::path dir = fs::path(TCNSCOPE_FIXTURE_DIR) / "ntu";
  auto parse = [&](const std::string& name, std::vector<std::string>* w = nullptr) {
    std::ifstream in(dir / name);
    return parse_ntu_skeleton(in, w);
  };
  auto written = [](double v, int digits) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return std::stod(ss.str());
  };
  auto body = [&](int which, std::size_t j, std::size_t a) {
    const double jj = static_cast<double>(j);
    const double xs[2][3] = {{jj * 0.01, 0.5 + jj * 0.02, 3.0 + jj * 0.001}, {-jj * 0.01, -0.5 - jj * 0.02, 2.0 + jj * 0.001}};
    return written(xs[which][a], a == 2 ? 3 : 2);
  };
  auto expect_frame = [&](const SkeletonSequence& s, std::size_t t, int slot0, int slot1) {
    bool ok = true;
    for (std::size_t j = 0; j < 25; ++j)
      for (std::size_t a = 0; a < 3; ++a) {
        ok = ok && s.frames.at(t, (0 * 25 + j) * 3 + a) == (slot0 < 0 ? 0.0 : body(slot0, j, a));
        ok = ok && s.frames.at(t, (1 * 25 + j) * 3 + a) == (slot1 < 0 ? 0.0 : body(slot1, j, a));
      }
    return ok;
  };
  int passed = 0, total = 0;
  std::string failures;
  auto expect = [&](bool ok, const std::string& what) {
    ++total;
    passed += ok;
    if (!ok) failures += " " + what;
  };
  try {
    auto ones = parse("ones.skeleton");
    bool ok = ones.frames.shape() == Tensor::Shape{1, 150};
    for (std::size_t j = 0; ok && j < 25; ++j)
      for (std::size_t a = 0; a < 3; ++a)
        ok = ok && ones.frames.at(0, j * 3 + a) == static_cast<double>(a + 1) && ones.frames.at(0, 75 + j * 3 + a) == 0.0;
    expect(ok, "constant");
    auto two = parse("S001C002P003R002A013.skeleton");
    expect(two.length() == 2 && expect_frame(two, 0, 0, -1) && expect_frame(two, 1, 0, 1), "two-body");
    auto zero = parse("zero_body.skeleton");
    expect(zero.length() == 3 && expect_frame(zero, 0, 0, -1) && expect_frame(zero, 1, -1, -1) &&
               expect_frame(zero, 2, 0, -1),
           "zero-body");
    std::vector<std::string> warnings;
    auto three = parse("three_body.skeleton", &warnings);
    expect(three.length() == 1 && expect_frame(three, 0, 0, 1) && warnings.size() == 1, "three-body");
  } catch (const std::exception& e) {
    expect(false, std::string("unexpected error: ") + e.what());
  }
  auto error_line = [&](const std::string& name) -> long {
    try {
      parse(name);
    } catch (const ParseError& e) {
      return static_cast<long>(e.line());
    }
    return -1;
  };
  expect(error_line("empty.skeleton") == 1, "empty");
  expect(error_line("truncated.skeleton") == 25, "truncated");
  expect(error_line("bad_token.skeleton") == 11, "bad-token");
  expect(error_line("bad_joint_count.skeleton") == 4, "joint-count");

  const auto m = parse_ntu_filename("S001C002P003R002A013");
  expect(m.camera == 2 && m.performer == 3 && m.action == 13, "filename S001C002P003R002A013");
  expect(parse_ntu_filename("S017C003P040R002A060").action == 60, "filename S017C003P040R002A060");
  bool rejects = true;
  for (const char* bad : {"s001c002p003r002a013", "S001C002P003A013"}) {
    try {
      parse_ntu_filename(bad);
      rejects = false;
    } catch (const ParseError&) {
    }
  }
  expect(rejects, "filename rejection");
  return {passed == total, std::to_string(passed) + "/" + std::to_string(total) + " fixture and filename checks" +
                               (failures.empty() ? "" : ", failed:" + failures)};
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_reproducibility(const std::string& cli) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found (pass --cli PATH)"};
  const auto root = scratch_dir("c9");
  const std::string common = " --synthetic --train-per-class 12 --test-per-class 4 --channels 4,6,8 --epochs 3"
                             " --batch-size 8 --seed 3 --run-root '" + root.string() + "'";
  const fs::path log = root / "cli.log";
  auto run = [&](const std::string& args) {
    return std::system(("'" + cli + "' " + args + " >> '" + log.string() + "' 2>&1").c_str());
  };
  {
    std::ofstream mask(root / "fine.json");
    mask << R"({"dims": [42, 43, 44, 45, 46, 47], "provenance": "synthetic fine-motion joints"})";
  }
  std::vector<std::string> report;
  bool ok = true;
  for (const std::string command : {"train", "refine"}) {
    std::string extra = command == "refine" ? " --mask '" + (root / "fine.json").string() + "'" : "";
    if (run(command + common + extra + " --name " + command) != 0) {
      ok = false;
      report.push_back(command + " run failed");
      continue;
    }
    if (run(command + " --manifest '" + (root / command / "manifest.json").string() + "'") != 0) {
      ok = false;
      report.push_back(command + " rerun failed");
      continue;
    }
    const std::string first = slurp(root / command / "history.csv");
    const std::string again = slurp(root / (command + "-rerun") / "history.csv");
    const bool same = !first.empty() && first == again;
    ok = ok && same;
    report.push_back(command + (same ? " history identical" : " history DIFFERS"));
  }
  if (ok) fs::remove_all(root);
  std::string detail;
  for (const auto& r : report) detail += (detail.empty() ? "" : "; ") + r;
  if (!ok) detail += " (log in " + log.string() + ")";
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) cli = argv[++i];
    else selected.insert(std::atoi(a.c_str()));
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient suite", criterion_gradients},
      {"convolution oracle", criterion_conv_oracle},
      {"residual identity", criterion_residual_identity},
      {"decoder oracle", criterion_decoder_oracle},
      {"decoder trivia", criterion_decoder_trivia},
      {"MS structure", criterion_ms_structure},
      {"synthetic refinement experiment", criterion_synthetic_refinement},
      {"NTU parser", criterion_ntu_parser},
      {"reproducibility from manifest", [&] { return criterion_reproducibility(cli); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << "  " << criteria[k].first << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}

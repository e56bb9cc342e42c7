#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/error.hpp"
#include "tcnscope/msnet.hpp"

namespace tcnscope {

/**
 * Desk-scale surrogate for fine-grained action confusion.
 *
 * Classes 0 and 1 share the same gross motion and differ only by the
 * frequency of a small phase-locked oscillation on `fine_dims`. Every other
 * class has its own gross motion pattern. All samples carry large
 * class-independent distractor oscillations on the non-fine dims and
 * Gaussian noise everywhere.
 */
struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t joints = 16;
  std::size_t frames = 64;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  MaskSpec fine_dims;
  double distractor_amplitude = 0.3;
  double fine_amplitude = 0.3;
  double gross_amplitude = 0.2;
  double noise = 0.02;
  /// cycles per sequence of the fine oscillation for classes 0 and 1
  double fine_cycles_a = 4.0;
  double fine_cycles_b = 6.0;
  std::uint64_t seed = 0;

  /// The last two joints (six dims) of a one-actor synthetic skeleton.
  static MaskSpec default_fine_dims(std::size_t joints) {
    MaskSpec m;
    m.provenance = "synthetic fine-motion joints";
    for (std::size_t d = (joints - 2) * 3; d < joints * 3; ++d) m.kept_dims.push_back(d);
    return m;
  }

  std::size_t dims() const { return joints * 3; }

  void validate() const {
    if (num_classes < 2) throw ConfigError("synthetic: need at least 2 classes");
    if (joints < 4) throw ConfigError("synthetic: need at least 4 joints");
    if (frames < 2) throw ConfigError("synthetic: need at least 2 frames");
    if (train_per_class == 0) throw ConfigError("synthetic: train_per_class must be positive");
    fine_dims.validate(dims());
    if (fine_dims.kept_dims.size() == dims()) throw ConfigError("synthetic: fine dims must leave some dims free");
    if (distractor_amplitude < 0 || fine_amplitude < 0 || gross_amplitude < 0 || noise < 0)
      throw ConfigError("synthetic: amplitudes and noise must be non-negative");
  }
};

struct SyntheticData {
  std::vector<SkeletonSequence> train;
  std::vector<SkeletonSequence> test;
  std::vector<int> confusable{0, 1};
};

namespace detail {

struct SynthGenerator {
  const SyntheticSpec& spec;
  std::shared_ptr<const SkeletonLayout> layout;
  std::vector<char> fine;
  std::vector<std::size_t> free_dims;
  std::vector<double> rest_pose;
  std::vector<double> fine_phase;
  // per-class gross pattern: which free dims move, at what rate and phase
  std::vector<std::vector<std::size_t>> gross_dims;
  std::vector<double> gross_cycles;
  std::vector<std::vector<double>> gross_phase;

  explicit SynthGenerator(const SyntheticSpec& s)
      : spec(s), layout(std::make_shared<const SkeletonLayout>(SkeletonLayout::synthetic(s.joints))) {
    const std::size_t D = s.dims();
    fine.assign(D, 0);
    for (auto d : s.fine_dims.kept_dims) fine[d] = 1;
    for (std::size_t d = 0; d < D; ++d)
      if (!fine[d]) free_dims.push_back(d);
    std::mt19937_64 rng(mix_seed(s.seed, 0x5eed));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t j = 0; j < s.joints; ++j) {
      rest_pose.push_back(0.3 * std::cos(0.7 * static_cast<double>(j)));
      rest_pose.push_back(0.1 * static_cast<double>(j));
      rest_pose.push_back(3.0 + 0.05 * std::sin(static_cast<double>(j)));
    }
    for (std::size_t d = 0; d < D; ++d) fine_phase.push_back(2.0 * std::numbers::pi * u(rng));
    // classes 0 and 1 share pattern 0
    const std::size_t patterns = s.num_classes - 1;
    for (std::size_t p = 0; p < patterns; ++p) {
      std::vector<std::size_t> dims;
      std::vector<double> phases;
      for (std::size_t k = 0; k < free_dims.size(); ++k)
        if (k % patterns == p) {
          dims.push_back(free_dims[k]);
          phases.push_back(2.0 * std::numbers::pi * u(rng));
        }
      gross_dims.push_back(std::move(dims));
      gross_phase.push_back(std::move(phases));
      gross_cycles.push_back(1.0 + 0.5 * static_cast<double>(p));
    }
  }

  SkeletonSequence sample(int label, std::mt19937_64& rng) const {
    const std::size_t T = spec.frames, D = spec.dims();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    SkeletonSequence s;
    s.layout = layout;
    s.label = label;
    s.frames = Tensor({T, D});
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t d = 0; d < D; ++d) s.frames.at(t, d) = rest_pose[d];
    // distractors: two random oscillations per free dim, same law for every class
    for (auto d : free_dims)
      for (int m = 0; m < 2; ++m) {
        const double amp = spec.distractor_amplitude * (0.5 + 0.5 * u(rng));
        const double cycles = 0.5 + 7.5 * u(rng);
        const double phase = two_pi * u(rng);
        for (std::size_t t = 0; t < T; ++t)
          s.frames.at(t, d) += amp * std::sin(two_pi * cycles * static_cast<double>(t) / static_cast<double>(T) + phase);
      }
    const std::size_t pattern = label <= 1 ? 0 : static_cast<std::size_t>(label - 1);
    const double jitter = 0.2 * (u(rng) - 0.5);
    for (std::size_t k = 0; k < gross_dims[pattern].size(); ++k)
      for (std::size_t t = 0; t < T; ++t)
        s.frames.at(t, gross_dims[pattern][k]) +=
            spec.gross_amplitude * std::sin(two_pi * gross_cycles[pattern] * static_cast<double>(t) / static_cast<double>(T) +
                                            gross_phase[pattern][k] + jitter);
    if (label <= 1) {
      const double cycles = label == 0 ? spec.fine_cycles_a : spec.fine_cycles_b;
      for (auto d : spec.fine_dims.kept_dims)
        for (std::size_t t = 0; t < T; ++t)
          s.frames.at(t, d) +=
              spec.fine_amplitude * std::sin(two_pi * cycles * static_cast<double>(t) / static_cast<double>(T) + fine_phase[d]);
    }
    for (auto& v : s.frames.values()) v += spec.noise * gauss(rng);
    return s;
  }
};

}  // namespace detail

/// Deterministic for a given spec; classes are balanced and interleaved. Empty fine dims mean the default set.
inline SyntheticData synth_generate(SyntheticSpec spec) {
  if (spec.fine_dims.kept_dims.empty()) spec.fine_dims = SyntheticSpec::default_fine_dims(spec.joints);
  spec.validate();
  detail::SynthGenerator gen(spec);
  SyntheticData out;
  auto fill = [&](std::vector<SkeletonSequence>& dst, std::size_t per_class, std::uint64_t salt, const char* tag) {
    std::mt19937_64 rng(mix_seed(spec.seed, salt));
    for (std::size_t i = 0; i < per_class; ++i)
      for (std::size_t c = 0; c < spec.num_classes; ++c) {
        auto s = gen.sample(static_cast<int>(c), rng);
        s.name = std::string(tag) + std::to_string(dst.size());
        s.meta.action = static_cast<int>(c) + 1;
        s.meta.replication = static_cast<int>(i);
        dst.push_back(std::move(s));
      }
  };
  fill(out.train, spec.train_per_class, 1, "train");
  fill(out.test, spec.test_per_class, 2, "test");
  return out;
}

}  // namespace tcnscope

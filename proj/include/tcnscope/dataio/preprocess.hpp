#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/error.hpp"
#include "tcnscope/training.hpp"

namespace tcnscope {

enum class Protocol { cross_subject, cross_view };

inline Protocol parse_protocol(const std::string& s) {
  if (s == "cross_subject" || s == "cs") return Protocol::cross_subject;
  if (s == "cross_view" || s == "cv") return Protocol::cross_view;
  throw ConfigError("unknown split protocol '" + s + "'");
}

inline std::string to_string(Protocol p) { return p == Protocol::cross_subject ? "cross_subject" : "cross_view"; }

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Cross-subject: performer in `train_ids` goes to train. Cross-view: camera in `train_ids` goes to train.
inline SplitIndices split(std::span<const SkeletonSequence> seqs, Protocol protocol, std::span<const int> train_ids) {
  SplitIndices out;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const int key = protocol == Protocol::cross_subject ? seqs[i].meta.performer : seqs[i].meta.camera;
    const bool train = std::find(train_ids.begin(), train_ids.end(), key) != train_ids.end();
    (train ? out.train : out.test).push_back(i);
  }
  if (out.train.empty() || out.test.empty())
    throw ConfigError(to_string(protocol) + " split leaves the " + (out.train.empty() ? "train" : "test") + " side empty");
  return out;
}

inline std::vector<SkeletonSequence> select(std::span<const SkeletonSequence> seqs, std::span<const std::size_t> idx) {
  std::vector<SkeletonSequence> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(seqs[i]);
  return out;
}

/// Whether padding frames are added before the mean is subtracted (they become -mean) or after (they stay zero).
enum class PadOrder { pad_then_subtract, subtract_then_pad };

inline PadOrder parse_pad_order(const std::string& s) {
  if (s == "pad_then_subtract") return PadOrder::pad_then_subtract;
  if (s == "subtract_then_pad") return PadOrder::subtract_then_pad;
  throw ConfigError("unknown pad order '" + s + "'");
}

inline std::string to_string(PadOrder p) {
  return p == PadOrder::pad_then_subtract ? "pad_then_subtract" : "subtract_then_pad";
}

/// Fit time to `target_T` (trailing zero frames or a centered crop) and subtract the mean pose.
inline Tensor preprocess(const SkeletonSequence& seq, std::size_t target_T, const MeanSkeleton& mean,
                         PadOrder order = PadOrder::pad_then_subtract) {
  if (target_T == 0) throw ParameterError("preprocess: target length must be positive");
  const std::size_t T = seq.length(), D = seq.frames.extent(1);
  if (mean.dims() != D) throw ConsistencyError("preprocess: mean skeleton width does not match sequence");
  const std::size_t start = T > target_T ? (T - target_T) / 2 : 0;
  const std::size_t copied = std::min(T, target_T);
  Tensor out({target_T, D});
  for (std::size_t t = 0; t < target_T; ++t) {
    const bool real = t < copied;
    if (!real && order == PadOrder::subtract_then_pad) continue;
    for (std::size_t d = 0; d < D; ++d) out.at(t, d) = (real ? seq.frames.at(start + t, d) : 0.0) - mean.values[d];
  }
  return out;
}

/// Stack preprocessed sequences into an N×T×D dataset; ids are positions in `seqs`.
inline Dataset make_dataset(std::span<const SkeletonSequence> seqs, std::size_t target_T, const MeanSkeleton& mean,
                            std::size_t num_classes, PadOrder order = PadOrder::pad_then_subtract) {
  if (seqs.empty()) throw DataError("make_dataset: no sequences");
  Dataset d;
  d.num_classes = num_classes;
  const std::size_t D = mean.dims(), row = target_T * D;
  d.inputs = Tensor({seqs.size(), target_T, D});
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (seqs[i].label < 0 || static_cast<std::size_t>(seqs[i].label) >= num_classes)
      throw DataError("make_dataset: label " + std::to_string(seqs[i].label) + " of '" + seqs[i].name +
                      "' outside [0, " + std::to_string(num_classes) + ")");
    Tensor x = preprocess(seqs[i], target_T, mean, order);
    std::copy_n(x.data(), row, d.inputs.data() + i * row);
    d.labels.push_back(seqs[i].label);
    d.ids.push_back(i);
  }
  return d;
}

}  // namespace tcnscope

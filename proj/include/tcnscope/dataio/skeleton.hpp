#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tcnscope/tensor.hpp"

namespace tcnscope {

/**
 * Joint naming, bone adjacency and actor slots of a skeleton dataset.
 *
 * Per-frame vectors are ordered actor-major, joint-major, xyz-minor:
 * dim = (actor * joints + joint) * 3 + axis.
 */
struct SkeletonLayout {
  std::string name;
  std::vector<std::string> joint_names;
  std::vector<std::pair<std::size_t, std::size_t>> bones;
  std::size_t actor_slots = 1;

  std::size_t joints() const { return joint_names.size(); }
  std::size_t dims() const { return actor_slots * joints() * 3; }

  std::size_t dim_index(std::size_t actor, std::size_t joint, std::size_t axis) const {
    return (actor * joints() + joint) * 3 + axis;
  }

  std::string dim_name(std::size_t dim) const {
    static constexpr const char* axes[] = {"x", "y", "z"};
    const std::size_t joint = (dim / 3) % joints();
    const std::size_t actor = dim / (3 * joints());
    return "a" + std::to_string(actor) + "_" + joint_names[joint] + "_" + axes[dim % 3];
  }

  std::optional<std::size_t> joint_index(const std::string& joint) const {
    for (std::size_t j = 0; j < joint_names.size(); ++j)
      if (joint_names[j] == joint) return j;
    return std::nullopt;
  }

  /// The 25-joint Kinect v2 skeleton with two actor slots (150 dims per frame).
  static SkeletonLayout ntu() {
    SkeletonLayout l;
    l.name = "ntu";
    l.actor_slots = 2;
    l.joint_names = {"SpineBase",     "SpineMid",   "Neck",         "Head",       "ShoulderLeft",
                     "ElbowLeft",     "WristLeft",  "HandLeft",     "ShoulderRight", "ElbowRight",
                     "WristRight",    "HandRight",  "HipLeft",      "KneeLeft",   "AnkleLeft",
                     "FootLeft",      "HipRight",   "KneeRight",    "AnkleRight", "FootRight",
                     "SpineShoulder", "HandTipLeft", "ThumbLeft",   "HandTipRight", "ThumbRight"};
    // 1-based pairs from the Kinect v2 joint map.
    const std::pair<int, int> one_based[] = {{1, 2},   {2, 21},  {21, 3},  {3, 4},   {21, 5},  {5, 6},
                                             {6, 7},   {7, 8},   {8, 22},  {8, 23},  {21, 9},  {9, 10},
                                             {10, 11}, {11, 12}, {12, 24}, {12, 25}, {1, 13},  {13, 14},
                                             {14, 15}, {15, 16}, {1, 17},  {17, 18}, {18, 19}, {19, 20}};
    for (auto [a, b] : one_based) l.bones.emplace_back(a - 1, b - 1);
    return l;
  }

  /// Generic chain-and-limbs skeleton used by the synthetic generator.
  static SkeletonLayout synthetic(std::size_t joints, std::size_t actors = 1) {
    SkeletonLayout l;
    l.name = "synthetic" + std::to_string(joints);
    l.actor_slots = actors;
    for (std::size_t j = 0; j < joints; ++j) l.joint_names.push_back("J" + std::to_string(j));
    // spine 0..3, then limbs of three joints hanging from the spine top
    const std::size_t spine = std::min<std::size_t>(4, joints);
    for (std::size_t j = 1; j < spine; ++j) l.bones.emplace_back(j - 1, j);
    for (std::size_t j = spine; j < joints; ++j) l.bones.emplace_back((j - spine) % 3 == 0 ? spine - 1 : j - 1, j);
    return l;
  }
};

struct SequenceMeta {
  int setup = 0;
  int camera = 0;
  int performer = 0;
  int replication = 0;
  int action = 0;
};

/// T frames of flattened joint coordinates (meters), T×D with D = layout->dims().
struct SkeletonSequence {
  std::string name;
  Tensor frames;
  std::shared_ptr<const SkeletonLayout> layout;
  int label = 0;
  SequenceMeta meta;

  std::size_t length() const { return frames.empty() ? 0 : frames.extent(0); }

  std::array<double, 3> joint(std::size_t t, std::size_t actor, std::size_t j) const {
    const std::size_t d = layout->dim_index(actor, j, 0);
    return {frames.at(t, d), frames.at(t, d + 1), frames.at(t, d + 2)};
  }

  /// positions[t][actor * J + j] -> flattened frames.
  static SkeletonSequence from_joints(const std::vector<std::vector<std::array<double, 3>>>& positions,
                                      std::shared_ptr<const SkeletonLayout> layout) {
    SkeletonSequence s;
    s.layout = std::move(layout);
    const std::size_t per_frame = s.layout->actor_slots * s.layout->joints();
    s.frames = Tensor({positions.size(), s.layout->dims()});
    for (std::size_t t = 0; t < positions.size(); ++t) {
      if (positions[t].size() != per_frame) throw ShapeError("from_joints: wrong joint count in frame");
      for (std::size_t k = 0; k < per_frame; ++k)
        for (std::size_t a = 0; a < 3; ++a) s.frames.at(t, k * 3 + a) = positions[t][k][a];
    }
    return s;
  }

  std::vector<std::vector<std::array<double, 3>>> to_joints() const {
    const std::size_t per_frame = layout->actor_slots * layout->joints();
    std::vector<std::vector<std::array<double, 3>>> out(length(), std::vector<std::array<double, 3>>(per_frame));
    for (std::size_t t = 0; t < length(); ++t)
      for (std::size_t k = 0; k < per_frame; ++k)
        for (std::size_t a = 0; a < 3; ++a) out[t][k][a] = frames.at(t, k * 3 + a);
    return out;
  }
};

/// Per-dimension mean pose over every frame of the training sequences.
struct MeanSkeleton {
  std::vector<double> values;

  std::size_t dims() const { return values.size(); }

  static MeanSkeleton zeros(std::size_t dims) { return {std::vector<double>(dims, 0.0)}; }

  static MeanSkeleton compute(std::span<const SkeletonSequence> training) {
    if (training.empty()) throw DataError("mean skeleton: no training sequences");
    const std::size_t D = training.front().frames.extent(1);
    std::vector<double> sum(D, 0.0);
    std::size_t frames = 0;
    for (const auto& s : training) {
      if (s.frames.extent(1) != D) throw ShapeError("mean skeleton: inconsistent frame width");
      for (std::size_t t = 0; t < s.length(); ++t)
        for (std::size_t d = 0; d < D; ++d) sum[d] += s.frames.at(t, d);
      frames += s.length();
    }
    for (auto& v : sum) v /= static_cast<double>(frames);
    return {sum};
  }

  Tensor as_tensor() const { return Tensor({values.size()}, values); }
};

}  // namespace tcnscope

#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include <nlohmann/json.hpp>

#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/dataio/synthetic.hpp"
#include "tcnscope/error.hpp"
#include "tcnscope/msnet.hpp"
#include "tcnscope/optim.hpp"
#include "tcnscope/restcn.hpp"

namespace tcnscope {

using json = nlohmann::json;

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void read_key(const json& j, const char* key, T& out, const char* where) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

}  // namespace detail

inline json to_json(const ResTCNConfig& c) {
  return {{"input_dim", c.input_dim},
          {"num_classes", c.num_classes},
          {"block_channels", c.block_channels},
          {"first_filter_len", c.first_filter_len},
          {"unit_filter_len", c.unit_filter_len},
          {"dropout", c.dropout},
          {"downsample", c.downsample}};
}

inline void update_from_json(ResTCNConfig& c, const json& j) {
  constexpr const char* w = "model";
  detail::reject_unknown(j, {"input_dim", "num_classes", "block_channels", "first_filter_len", "unit_filter_len",
                             "dropout", "downsample"}, w);
  detail::read_key(j, "input_dim", c.input_dim, w);
  detail::read_key(j, "num_classes", c.num_classes, w);
  detail::read_key(j, "block_channels", c.block_channels, w);
  detail::read_key(j, "first_filter_len", c.first_filter_len, w);
  detail::read_key(j, "unit_filter_len", c.unit_filter_len, w);
  detail::read_key(j, "dropout", c.dropout, w);
  detail::read_key(j, "downsample", c.downsample, w);
}

inline json to_json(const SGDConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"momentum", c.momentum},
          {"l1_weight", c.l1_weight},         {"plateau_patience", c.plateau_patience},
          {"plateau_factor", c.plateau_factor}, {"min_delta", c.min_delta}};
}

inline void update_from_json(SGDConfig& c, const json& j) {
  constexpr const char* w = "sgd";
  detail::reject_unknown(j, {"learning_rate", "momentum", "l1_weight", "plateau_patience", "plateau_factor", "min_delta"},
                         w);
  detail::read_key(j, "learning_rate", c.learning_rate, w);
  detail::read_key(j, "momentum", c.momentum, w);
  detail::read_key(j, "l1_weight", c.l1_weight, w);
  detail::read_key(j, "plateau_patience", c.plateau_patience, w);
  detail::read_key(j, "plateau_factor", c.plateau_factor, w);
  detail::read_key(j, "min_delta", c.min_delta, w);
}

inline json to_json(const MaskSpec& m) { return {{"dims", m.kept_dims}, {"provenance", m.provenance}}; }

/**
 * {"joints": [...], "dims": [...], "provenance": "..."}. Joint names select
 * every actor slot and axis of that joint; the union with `dims` is kept.
 */
inline MaskSpec mask_from_json(const json& j, const SkeletonLayout* layout) {
  constexpr const char* w = "mask";
  detail::reject_unknown(j, {"joints", "dims", "provenance"}, w);
  std::vector<std::string> joints;
  std::vector<std::size_t> dims;
  MaskSpec m;
  detail::read_key(j, "joints", joints, w);
  detail::read_key(j, "dims", dims, w);
  detail::read_key(j, "provenance", m.provenance, w);
  if (!joints.empty() && !layout) throw ConfigError("mask: joint names need a skeleton layout");
  std::vector<std::size_t> all = dims;
  for (const auto& name : joints) {
    auto jt = layout->joint_index(name);
    if (!jt) throw ConfigError("mask: unknown joint '" + name + "' for layout " + layout->name);
    for (std::size_t a = 0; a < layout->actor_slots; ++a)
      for (std::size_t ax = 0; ax < 3; ++ax) all.push_back(layout->dim_index(a, *jt, ax));
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  m.kept_dims = std::move(all);
  if (m.kept_dims.empty()) throw ConfigError("mask: no joints or dims given");
  return m;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline MaskSpec load_mask_file(const std::filesystem::path& path, const SkeletonLayout* layout) {
  MaskSpec m = mask_from_json(read_json_file(path), layout);
  if (m.provenance.empty()) m.provenance = path.filename().string();
  return m;
}

inline std::string to_string(PipeActivation a) { return a == PipeActivation::relu_only ? "relu_only" : "bn_relu"; }
inline std::string to_string(PipeInit i) { return i == PipeInit::zero ? "zero" : "he"; }

inline PipeActivation parse_pipe_activation(const std::string& s) {
  if (s == "relu_only") return PipeActivation::relu_only;
  if (s == "bn_relu") return PipeActivation::bn_relu;
  throw ConfigError("unknown pipe activation '" + s + "'");
}

inline PipeInit parse_pipe_init(const std::string& s) {
  if (s == "zero") return PipeInit::zero;
  if (s == "he") return PipeInit::he;
  throw ConfigError("unknown pipe init '" + s + "'");
}

/// Pipe settings only; the base architecture and mask are serialized separately.
inline json pipes_to_json(const MSResTCNConfig& c) {
  return {{"filter_len", c.pipe_filter_len},
          {"activation", to_string(c.pipe_activation)},
          {"init", to_string(c.pipe_init)}};
}

inline void update_pipes_from_json(MSResTCNConfig& c, const json& j) {
  constexpr const char* w = "pipes";
  detail::reject_unknown(j, {"filter_len", "activation", "init"}, w);
  detail::read_key(j, "filter_len", c.pipe_filter_len, w);
  std::string s;
  if (j.contains("activation")) {
    detail::read_key(j, "activation", s, w);
    c.pipe_activation = parse_pipe_activation(s);
  }
  if (j.contains("init")) {
    detail::read_key(j, "init", s, w);
    c.pipe_init = parse_pipe_init(s);
  }
}

inline json to_json(const SyntheticSpec& s) {
  return {{"num_classes", s.num_classes},
          {"joints", s.joints},
          {"frames", s.frames},
          {"train_per_class", s.train_per_class},
          {"test_per_class", s.test_per_class},
          {"fine_dims", s.fine_dims.kept_dims},
          {"distractor_amplitude", s.distractor_amplitude},
          {"fine_amplitude", s.fine_amplitude},
          {"gross_amplitude", s.gross_amplitude},
          {"noise", s.noise},
          {"fine_cycles_a", s.fine_cycles_a},
          {"fine_cycles_b", s.fine_cycles_b},
          {"seed", s.seed}};
}

inline void update_from_json(SyntheticSpec& s, const json& j) {
  constexpr const char* w = "synthetic";
  detail::reject_unknown(j, {"num_classes", "joints", "frames", "train_per_class", "test_per_class", "fine_dims",
                             "distractor_amplitude", "fine_amplitude", "gross_amplitude", "noise", "fine_cycles_a",
                             "fine_cycles_b", "seed"}, w);
  detail::read_key(j, "num_classes", s.num_classes, w);
  detail::read_key(j, "joints", s.joints, w);
  detail::read_key(j, "frames", s.frames, w);
  detail::read_key(j, "train_per_class", s.train_per_class, w);
  detail::read_key(j, "test_per_class", s.test_per_class, w);
  detail::read_key(j, "fine_dims", s.fine_dims.kept_dims, w);
  detail::read_key(j, "distractor_amplitude", s.distractor_amplitude, w);
  detail::read_key(j, "fine_amplitude", s.fine_amplitude, w);
  detail::read_key(j, "gross_amplitude", s.gross_amplitude, w);
  detail::read_key(j, "noise", s.noise, w);
  detail::read_key(j, "fine_cycles_a", s.fine_cycles_a, w);
  detail::read_key(j, "fine_cycles_b", s.fine_cycles_b, w);
  detail::read_key(j, "seed", s.seed, w);
}

inline json to_json(const SkeletonLayout& l) {
  json bones = json::array();
  for (auto [a, b] : l.bones) bones.push_back({a, b});
  return {{"name", l.name}, {"joint_names", l.joint_names}, {"bones", bones}, {"actor_slots", l.actor_slots}};
}

inline SkeletonLayout layout_from_json(const json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "ntu") return SkeletonLayout::ntu();
    throw ConfigError("unknown skeleton layout '" + name + "'");
  }
  constexpr const char* w = "layout";
  detail::reject_unknown(j, {"name", "joint_names", "bones", "actor_slots"}, w);
  SkeletonLayout l;
  detail::read_key(j, "name", l.name, w);
  detail::read_key(j, "joint_names", l.joint_names, w);
  detail::read_key(j, "actor_slots", l.actor_slots, w);
  std::vector<std::array<std::size_t, 2>> bones;
  detail::read_key(j, "bones", bones, w);
  for (auto& b : bones) {
    if (b[0] >= l.joint_names.size() || b[1] >= l.joint_names.size()) throw ConfigError("layout: bone joint out of range");
    l.bones.emplace_back(b[0], b[1]);
  }
  if (l.joint_names.empty() || l.actor_slots == 0) throw ConfigError("layout: needs joints and at least one actor slot");
  return l;
}

inline json to_json(const SequenceMeta& m) {
  return {{"setup", m.setup}, {"camera", m.camera}, {"performer", m.performer}, {"replication", m.replication},
          {"action", m.action}};
}

inline SequenceMeta meta_from_json(const json& j) {
  constexpr const char* w = "meta";
  detail::reject_unknown(j, {"setup", "camera", "performer", "replication", "action"}, w);
  SequenceMeta m;
  detail::read_key(j, "setup", m.setup, w);
  detail::read_key(j, "camera", m.camera, w);
  detail::read_key(j, "performer", m.performer, w);
  detail::read_key(j, "replication", m.replication, w);
  detail::read_key(j, "action", m.action, w);
  return m;
}

}  // namespace tcnscope

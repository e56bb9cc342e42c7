#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tcnscope/config_json.hpp"
#include "tcnscope/dataio/preprocess.hpp"
#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/error.hpp"
#include "tcnscope/msnet.hpp"
#include "tcnscope/restcn.hpp"
#include "tcnscope/serialize.hpp"

namespace tcnscope {

/// Everything besides weights needed to apply a model to raw sequences.
struct ModelContext {
  MeanSkeleton mean;
  std::size_t target_T = 300;
  PadOrder pad_order = PadOrder::pad_then_subtract;
  std::shared_ptr<const SkeletonLayout> layout;
  json extra = json::object();
};

namespace detail {

inline std::string stat_name(const BatchNormState& bn, const char* stat) {
  std::string n = bn.scale.name;
  const std::string suffix = ".scale";
  if (n.size() >= suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0)
    n.erase(n.size() - suffix.size());
  return n + "." + stat;
}

}  // namespace detail

/// Every tensor that defines a model's eval-mode behavior, by unique name.
template <class Model>
std::vector<std::pair<std::string, Tensor*>> named_tensors(Model& model) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (auto* p : model.parameters()) out.emplace_back(p->name, &p->value);
  for (auto* bn : model.norms()) {
    out.emplace_back(detail::stat_name(*bn, "running_mean"), &bn->running_mean);
    out.emplace_back(detail::stat_name(*bn, "running_var"), &bn->running_var);
  }
  return out;
}

struct Checkpoint {
  ModelContext context;
  std::optional<ResTCN> single;
  std::optional<MSResTCN> ms;

  bool is_ms() const { return ms.has_value(); }
  const ResTCNConfig& base() const { return ms ? ms->config().base : single->config(); }
};

namespace detail {

template <class Model>
void save_checkpoint_impl(const std::filesystem::path& dir, Model& model, const ModelContext& ctx, json model_json) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "tensors");
  json names = json::array();
  for (auto& [name, t] : named_tensors(model)) {
    save_tensor(dir / "tensors" / (name + ".bin"), *t);
    names.push_back(name);
  }
  save_tensor(dir / "mean.bin", ctx.mean.as_tensor());
  json m{{"format", "tcnscope-checkpoint"},
         {"version", 1},
         {"model", std::move(model_json)},
         {"target_T", ctx.target_T},
         {"pad_order", to_string(ctx.pad_order)},
         {"tensors", names},
         {"extra", ctx.extra}};
  if (ctx.layout) m["layout"] = to_json(*ctx.layout);
  std::ofstream out(dir / "manifest.json");
  out << m.dump(1) << '\n';
  if (!out) throw DataError("checkpoint: cannot write " + (dir / "manifest.json").string());
}

template <class Model>
void load_tensors(const std::filesystem::path& dir, Model& model, const json& names) {
  auto slots = named_tensors(model);
  if (names.size() != slots.size()) throw ConsistencyError("checkpoint: tensor count does not match architecture");
  for (auto& [name, t] : slots) {
    Tensor v = load_tensor(dir / "tensors" / (name + ".bin"));
    if (v.shape() != t->shape())
      throw ConsistencyError("checkpoint: tensor " + name + " has shape " + Tensor::shape_string(v.shape()) +
                             ", architecture expects " + Tensor::shape_string(t->shape()));
    *t = std::move(v);
  }
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& dir, ResTCN& model, const ModelContext& ctx) {
  detail::save_checkpoint_impl(dir, model, ctx, {{"kind", "restcn"}, {"base", to_json(model.config())}});
}

inline void save_checkpoint(const std::filesystem::path& dir, MSResTCN& model, const ModelContext& ctx) {
  const auto& c = model.config();
  detail::save_checkpoint_impl(
      dir, model, ctx,
      {{"kind", "msrestcn"}, {"base", to_json(c.base)}, {"pipes", pipes_to_json(c)}, {"mask", to_json(c.mask)}});
}

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("checkpoint: no manifest.json in " + dir.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("checkpoint manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "tcnscope-checkpoint") throw DataError("checkpoint: unrecognized manifest format");
  Checkpoint ck;
  const json& model = m.at("model");
  ResTCNConfig base;
  update_from_json(base, model.at("base"));
  const std::string kind = model.at("kind").get<std::string>();
  if (kind == "restcn") {
    ck.single = ResTCN::build(base, 0);
    detail::load_tensors(dir, *ck.single, m.at("tensors"));
  } else if (kind == "msrestcn") {
    MSResTCNConfig cfg;
    cfg.base = base;
    update_pipes_from_json(cfg, model.at("pipes"));
    cfg.mask = mask_from_json(model.at("mask"), nullptr);
    ck.ms = MSResTCN::build(cfg, 0);
    detail::load_tensors(dir, *ck.ms, m.at("tensors"));
  } else {
    throw DataError("checkpoint: unknown model kind '" + kind + "'");
  }
  Tensor mean = load_tensor(dir / "mean.bin");
  ck.context.mean.values.assign(mean.values().begin(), mean.values().end());
  if (ck.context.mean.dims() != base.input_dim) throw ConsistencyError("checkpoint: mean skeleton width mismatch");
  ck.context.target_T = m.at("target_T").get<std::size_t>();
  ck.context.pad_order = parse_pad_order(m.at("pad_order").get<std::string>());
  if (m.contains("layout")) ck.context.layout = std::make_shared<const SkeletonLayout>(layout_from_json(m["layout"]));
  ck.context.extra = m.value("extra", json::object());
  return ck;
}

}  // namespace tcnscope

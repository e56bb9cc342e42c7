#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tcnscope/checkpoint.hpp"
#include "tcnscope/config_json.hpp"
#include "tcnscope/dataio/cache.hpp"
#include "tcnscope/dataio/ntu.hpp"
#include "tcnscope/dataio/preprocess.hpp"
#include "tcnscope/dataio/synthetic.hpp"
#include "tcnscope/export.hpp"
#include "tcnscope/msnet.hpp"
#include "tcnscope/training.hpp"

namespace tcnscope {

/// Where sequences come from and how they become fixed-length samples.
struct DataConfig {
  std::string source = "synthetic";  // synthetic | ntu | csv | cache
  std::string path;
  Protocol protocol = Protocol::cross_view;
  std::vector<int> train_ids;  // cameras or performers; empty selects the NTU defaults
  std::size_t target_T = 0;    // 0: synthetic frame count, else 300
  PadOrder pad_order = PadOrder::pad_then_subtract;
  std::size_t num_classes = 0;  // 0: inferred from the source
};

/**
 * Complete, serializable settings of one command. The JSON form is the
 * config-file schema; `RunConfig::to_json` output alone reproduces a run.
 */
struct RunConfig {
  std::uint64_t seed = 0;
  std::string run_root = "runs";
  std::string name;
  DataConfig data;
  SyntheticSpec synthetic;
  ResTCNConfig model;
  SGDConfig sgd;
  int epochs = 30;
  std::size_t batch_size = 128;
  std::string mask_file;
  json mask = json::object();
  MSResTCNConfig pipes;
};

inline json to_json(const DataConfig& d) {
  return {{"source", d.source},
          {"path", d.path},
          {"protocol", to_string(d.protocol)},
          {"train_ids", d.train_ids},
          {"target_T", d.target_T},
          {"pad_order", to_string(d.pad_order)},
          {"num_classes", d.num_classes}};
}

inline void update_from_json(DataConfig& d, const json& j) {
  constexpr const char* w = "data";
  detail::reject_unknown(j, {"source", "path", "protocol", "train_ids", "target_T", "pad_order", "num_classes"}, w);
  detail::read_key(j, "source", d.source, w);
  detail::read_key(j, "path", d.path, w);
  detail::read_key(j, "train_ids", d.train_ids, w);
  detail::read_key(j, "target_T", d.target_T, w);
  detail::read_key(j, "num_classes", d.num_classes, w);
  std::string s;
  if (j.contains("protocol")) {
    detail::read_key(j, "protocol", s, w);
    d.protocol = parse_protocol(s);
  }
  if (j.contains("pad_order")) {
    detail::read_key(j, "pad_order", s, w);
    d.pad_order = parse_pad_order(s);
  }
  if (d.source != "synthetic" && d.source != "ntu" && d.source != "csv" && d.source != "cache")
    throw ConfigError("data.source: unknown source '" + d.source + "'");
}

inline json to_json(const RunConfig& c) {
  json synth = to_json(c.synthetic);
  return {{"seed", c.seed},
          {"run_root", c.run_root},
          {"name", c.name},
          {"data", to_json(c.data)},
          {"synthetic", synth},
          {"model", to_json(c.model)},
          {"sgd", to_json(c.sgd)},
          {"train", {{"epochs", c.epochs}, {"batch_size", c.batch_size}}},
          {"refine", {{"mask_file", c.mask_file}, {"mask", c.mask}, {"pipes", pipes_to_json(c.pipes)}}}};
}

inline RunConfig run_config_from_json(const json& j) {
  constexpr const char* w = "config";
  detail::reject_unknown(j, {"seed", "run_root", "name", "data", "synthetic", "model", "sgd", "train", "refine"}, w);
  RunConfig c;
  detail::read_key(j, "seed", c.seed, w);
  detail::read_key(j, "run_root", c.run_root, w);
  detail::read_key(j, "name", c.name, w);
  if (j.contains("data")) update_from_json(c.data, j["data"]);
  if (j.contains("synthetic")) update_from_json(c.synthetic, j["synthetic"]);
  if (j.contains("model")) update_from_json(c.model, j["model"]);
  if (j.contains("sgd")) update_from_json(c.sgd, j["sgd"]);
  if (j.contains("train")) {
    detail::reject_unknown(j["train"], {"epochs", "batch_size"}, "train");
    detail::read_key(j["train"], "epochs", c.epochs, "train");
    detail::read_key(j["train"], "batch_size", c.batch_size, "train");
  }
  if (j.contains("refine")) {
    const json& r = j["refine"];
    detail::reject_unknown(r, {"mask_file", "mask", "pipes"}, "refine");
    detail::read_key(r, "mask_file", c.mask_file, "refine");
    if (r.contains("mask")) c.mask = r["mask"];
    if (r.contains("pipes")) update_pipes_from_json(c.pipes, r["pipes"]);
  }
  if (c.epochs < 0) throw ConfigError("train.epochs must be non-negative");
  if (c.batch_size == 0) throw ConfigError("train.batch_size must be positive");
  return c;
}

/// Sets `dotted.key.path` in `j`, creating objects on the way.
inline void set_json_path(json& j, const std::string& path, json value) {
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("bad config key '" + path + "'");
    if (!node->is_object()) throw ConfigError("config key '" + path + "' goes through a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

/// A flag or `--set` value: JSON when it parses as JSON, otherwise a plain string.
inline json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

/// Sequences of both splits plus everything needed to turn them into samples.
struct LoadedData {
  std::vector<SkeletonSequence> train;
  std::vector<SkeletonSequence> test;
  std::shared_ptr<const SkeletonLayout> layout;
  std::size_t num_classes = 0;
  std::size_t target_T = 0;
  std::vector<int> confusable;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<int> default_train_ids(Protocol p) {
  return p == Protocol::cross_view ? ntu_cross_view_train_cameras() : ntu_cross_subject_train_ids();
}

inline void split_into(LoadedData& out, std::vector<SkeletonSequence> seqs, const DataConfig& d) {
  const auto ids = d.train_ids.empty() ? default_train_ids(d.protocol) : d.train_ids;
  const auto parts = split(seqs, d.protocol, ids);
  out.train = select(seqs, parts.train);
  out.test = select(seqs, parts.test);
}

inline std::size_t label_span(const LoadedData& d) {
  int top = -1;
  for (const auto* side : {&d.train, &d.test})
    for (const auto& s : *side) top = std::max(top, s.label);
  return static_cast<std::size_t>(top + 1);
}

}  // namespace detail

inline LoadedData load_data(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const DataConfig& d = cfg.data;
  LoadedData out;
  std::size_t inferred_classes = 0;
  if (d.source == "synthetic") {
    auto data = synth_generate(cfg.synthetic);
    out.train = std::move(data.train);
    out.test = std::move(data.test);
    out.confusable = data.confusable;
    inferred_classes = cfg.synthetic.num_classes;
  } else {
    if (d.path.empty()) throw ConfigError("data.path is required for source '" + d.source + "'");
    if (d.source == "ntu") {
      detail::split_into(out, load_ntu_directory(d.path, &out.warnings), d);
      inferred_classes = 60;
    } else if (d.source == "csv") {
      if (!fs::is_directory(d.path)) throw DataError("not a directory: " + d.path);
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(d.path))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      if (files.empty()) throw DataError("no .csv sequences in " + d.path);
      std::vector<SkeletonSequence> seqs;
      for (const auto& f : files) seqs.push_back(read_sequence_csv(f));
      detail::split_into(out, std::move(seqs), d);
    } else {
      auto cache = load_sequence_cache(d.path);
      for (std::size_t i = 0; i < cache.sequences.size(); ++i) {
        if (cache.splits[i] == "train") out.train.push_back(std::move(cache.sequences[i]));
        else if (cache.splits[i] == "test") out.test.push_back(std::move(cache.sequences[i]));
      }
      if (out.train.empty() || out.test.empty()) throw DataError("sequence cache: needs both train and test sequences");
      inferred_classes = cache.num_classes;
      if (cache.extra.contains("confusable")) out.confusable = cache.extra["confusable"].get<std::vector<int>>();
    }
  }
  out.layout = out.train.front().layout;
  for (const auto* side : {&out.train, &out.test})
    for (const auto& s : *side)
      if (!s.layout || s.layout->dims() != out.layout->dims()) throw DataError("sequences disagree on frame width");
  out.num_classes = d.num_classes ? d.num_classes : std::max(inferred_classes, detail::label_span(out));
  out.target_T = d.target_T ? d.target_T : (d.source == "synthetic" ? cfg.synthetic.frames : 300);
  return out;
}

/// Architecture settings with input width and class count taken from the data.
inline ResTCNConfig resolved_model(const RunConfig& cfg, const LoadedData& data) {
  ResTCNConfig m = cfg.model;
  m.input_dim = data.layout->dims();
  m.num_classes = data.num_classes;
  m.validate();
  return m;
}

/// The refine mask, from inline JSON or the mask file, checked against the input width.
inline MaskSpec resolved_mask(const RunConfig& cfg, const SkeletonLayout& layout) {
  MaskSpec m;
  if (cfg.mask.is_object() && !cfg.mask.empty()) {
    m = mask_from_json(cfg.mask, &layout);
  } else if (!cfg.mask_file.empty()) {
    m = load_mask_file(cfg.mask_file, &layout);
  } else {
    throw ConfigError("refine: no mask given (refine.mask or refine.mask_file)");
  }
  m.validate(layout.dims());
  return m;
}

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return ss.str();
}

/// `<root>/<name>`, with a numeric suffix when the directory already exists.
inline std::filesystem::path fresh_run_dir(const std::filesystem::path& root, const std::string& name) {
  namespace fs = std::filesystem;
  fs::path dir = root / name;
  for (int k = 1; fs::exists(dir); ++k) dir = root / (name + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("cannot write " + path.string());
}

struct TrainOutcome {
  std::filesystem::path dir;
  History history;
  EvalResult final_test;
  int best_epoch = 0;
};

namespace detail {

template <class Model>
TrainOutcome train_into(const std::filesystem::path& dir, Model& model, const RunConfig& cfg, const LoadedData& data,
                        json manifest, std::ostream* log) {
  const auto mean = MeanSkeleton::compute(data.train);
  const auto train = make_dataset(data.train, data.target_T, mean, data.num_classes, cfg.data.pad_order);
  const auto test = make_dataset(data.test, data.target_T, mean, data.num_classes, cfg.data.pad_order);

  ModelContext ctx;
  ctx.mean = mean;
  ctx.target_T = data.target_T;
  ctx.pad_order = cfg.data.pad_order;
  ctx.layout = data.layout;
  ctx.extra = {{"run", manifest["config"]}};

  TrainOutcome out;
  out.dir = dir;
  double best_accuracy = -1.0;
  FitOptions opt;
  opt.sgd = cfg.sgd;
  opt.epochs = cfg.epochs;
  opt.batch_size = cfg.batch_size;
  opt.seed = mix_seed(cfg.seed, 2);
  opt.on_epoch = [&](const EpochRecord& r) {
    if (log)
      *log << "epoch " << r.epoch << "  lr " << r.learning_rate << "  train loss " << r.train_loss << " acc "
           << r.train_accuracy << "  test loss " << r.test_loss << " acc " << r.test_accuracy << std::endl;
    if (r.test_accuracy > best_accuracy) {
      best_accuracy = r.test_accuracy;
      out.best_epoch = r.epoch;
      save_checkpoint(dir / "checkpoints" / "best", model, ctx);
    }
  };
  manifest["status"] = "running";
  write_json(dir / "manifest.json", manifest);
  out.history = fit(model, train, test, opt);
  save_checkpoint(dir / "checkpoints" / "final", model, ctx);
  write_history_csv(dir / "history.csv", out.history);
  out.final_test = evaluate(model, test);
  write_confusion_csv(dir / "confusion.csv", out.final_test);

  manifest["status"] = "complete";
  manifest["results"] = {{"final_test_accuracy", out.final_test.accuracy},
                         {"final_test_loss", out.final_test.loss},
                         {"best_epoch", out.best_epoch},
                         {"best_test_accuracy", best_accuracy},
                         {"per_class_test_accuracy", out.final_test.per_class}};
  write_json(dir / "manifest.json", manifest);
  return out;
}

}  // namespace detail

/**
 * Run directory layout:
 *   manifest.json         command, full config, data summary, results
 *   config.json           the config alone, loadable with --config
 *   history.csv           one row per epoch (epoch 0 is before training)
 *   confusion.csv         final test confusion counts
 *   checkpoints/final     weights after the last epoch
 *   checkpoints/best      weights of the epoch with the highest test accuracy
 * `command` is "train" (Res-TCN) or "refine" (MS-Res-TCN with the configured mask).
 */
inline TrainOutcome run_training(RunConfig cfg, const std::string& command, std::ostream* log = nullptr) {
  if (command != "train" && command != "refine") throw ConfigError("run_training: unknown command " + command);
  const LoadedData data = load_data(cfg);
  if (log)
    for (const auto& w : data.warnings) *log << "warning: " << w << '\n';
  const ResTCNConfig model_cfg = resolved_model(cfg, data);
  std::optional<MaskSpec> mask;
  if (command == "refine") {
    mask = resolved_mask(cfg, *data.layout);
    cfg.mask = to_json(*mask);
  }
  if (cfg.name.empty()) cfg.name = command + "-s" + std::to_string(cfg.seed) + "-" + timestamp();
  const auto dir = fresh_run_dir(cfg.run_root, cfg.name);

  json manifest{{"format", "tcnscope-run"},
                {"version", 1},
                {"command", command},
                {"config", to_json(cfg)},
                {"data_summary",
                 {{"train_sequences", data.train.size()},
                  {"test_sequences", data.test.size()},
                  {"num_classes", data.num_classes},
                  {"target_T", data.target_T},
                  {"input_dim", model_cfg.input_dim},
                  {"layout", data.layout->name},
                  {"warnings", data.warnings}}},
                {"files",
                 {{"config", "config.json"},
                  {"history", "history.csv"},
                  {"confusion", "confusion.csv"},
                  {"final_checkpoint", "checkpoints/final"},
                  {"best_checkpoint", "checkpoints/best"}}}};
  if (mask) manifest["mask"] = {{"provenance", mask->provenance}, {"dims", mask->kept_dims}};
  write_json(dir / "config.json", manifest["config"]);

  if (mask) {
    MSResTCNConfig ms_cfg = cfg.pipes;
    ms_cfg.base = model_cfg;
    ms_cfg.mask = *mask;
    auto model = MSResTCN::build(ms_cfg, mix_seed(cfg.seed, 1));
    return detail::train_into(dir, model, cfg, data, std::move(manifest), log);
  }
  auto model = ResTCN::build(model_cfg, mix_seed(cfg.seed, 1));
  return detail::train_into(dir, model, cfg, data, std::move(manifest), log);
}

/// The run config recorded in a run manifest.
inline RunConfig run_config_from_manifest(const std::filesystem::path& manifest_path, std::string* command = nullptr) {
  const json m = read_json_file(manifest_path);
  if (m.value("format", "") != "tcnscope-run") throw ConfigError(manifest_path.string() + ": not a run manifest");
  if (command) *command = m.at("command").get<std::string>();
  return run_config_from_json(m.at("config"));
}

/// Mean accuracy over the samples whose label is in `classes`.
inline double subset_accuracy(const std::vector<int>& labels, const std::vector<int>& predictions,
                              const std::vector<int>& classes) {
  std::size_t hit = 0, n = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (std::find(classes.begin(), classes.end(), labels[i]) == classes.end()) continue;
    ++n;
    hit += predictions[i] == labels[i];
  }
  return n ? static_cast<double>(hit) / static_cast<double>(n) : 0.0;
}

}  // namespace tcnscope

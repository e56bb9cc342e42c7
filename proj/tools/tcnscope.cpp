#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "tcnscope/fmd.hpp"
#include "tcnscope/run.hpp"

namespace fs = std::filesystem;
using namespace tcnscope;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

/// Config sources for one invocation, applied in order: defaults or base, file, env, flags.
struct ConfigSources {
  std::string config_file;
  std::string manifest;
  std::vector<std::pair<std::string, json>> overrides;
  std::vector<std::string> sets;
};

struct FlagKey {
  const char* flag;
  const char* key;
  const char* help;
  bool list = false;
};

const FlagKey kDataFlags[] = {
    {"--source", "data.source", "synthetic | ntu | csv | cache"},
    {"--data", "data.path", "dataset directory"},
    {"--protocol", "data.protocol", "cross_subject | cross_view"},
    {"--train-ids", "data.train_ids", "training cameras or performers, comma separated", true},
    {"--target-T", "data.target_T", "fixed sample length"},
    {"--pad-order", "data.pad_order", "pad_then_subtract | subtract_then_pad"},
    {"--num-classes", "data.num_classes", "class count (0 infers it)"},
    {"--seed", "seed", "run seed"},
    {"--run-root", "run_root", "directory holding run directories"},
    {"--name", "name", "run directory name"},
    {"--synth-seed", "synthetic.seed", "synthetic dataset seed"},
    {"--fine-amplitude", "synthetic.fine_amplitude", "synthetic fine-motion amplitude"},
    {"--distractor-amplitude", "synthetic.distractor_amplitude", "synthetic distractor amplitude"},
    {"--noise", "synthetic.noise", "synthetic noise level"},
    {"--train-per-class", "synthetic.train_per_class", "synthetic training samples per class"},
    {"--test-per-class", "synthetic.test_per_class", "synthetic test samples per class"},
};

const FlagKey kTrainFlags[] = {
    {"--epochs", "train.epochs", "training epochs"},
    {"--batch-size", "train.batch_size", "mini-batch size"},
    {"--lr", "sgd.learning_rate", "initial learning rate"},
    {"--momentum", "sgd.momentum", "SGD momentum"},
    {"--l1", "sgd.l1_weight", "L1 weight on convolution weights"},
    {"--dropout", "model.dropout", "dropout probability"},
    {"--channels", "model.block_channels", "block widths, comma separated", true},
    {"--plateau-patience", "sgd.plateau_patience", "epochs without improvement before decay"},
};

const FlagKey kRefineFlags[] = {
    {"--mask", "refine.mask_file", "mask file naming joints or dims"},
    {"--pipe-activation", "refine.pipes.activation", "relu_only | bn_relu"},
    {"--pipe-init", "refine.pipes.init", "zero | he"},
    {"--pipe-filter-len", "refine.pipes.filter_len", "pipe filter length"},
};

template <std::size_t N>
void add_flags(CLI::App* app, ConfigSources& src, const FlagKey (&flags)[N]) {
  for (const auto& f : flags) {
    const std::string key = f.key;
    const bool list = f.list;
    app->add_option_function<std::string>(
           f.flag,
           [&src, key, list](const std::string& v) {
             std::string text = v;
             if (list && (text.empty() || text.front() != '[')) text = "[" + text + "]";
             src.overrides.emplace_back(key, parse_override_value(text));
           },
           std::string(f.help) + " (" + key + ")")
        ->type_name("VALUE");
  }
}

void add_config_options(CLI::App* app, ConfigSources& src) {
  app->add_option("-c,--config", src.config_file, "JSON config file");
  app->add_option("--set", src.sets, "override any config key: dotted.key=value")->type_name("KEY=VALUE");
  app->add_flag_callback(
      "--synthetic", [&src] { src.overrides.emplace_back("data.source", "synthetic"); },
      "use a generated synthetic dataset (data.source=synthetic)");
  add_flags(app, src, kDataFlags);
}

RunConfig resolve_config(json base, const ConfigSources& src) {
  if (!src.config_file.empty()) base.merge_patch(read_json_file(src.config_file));
  if (const char* root = std::getenv("TCNSCOPE_RUN_ROOT"); root && *root) base["run_root"] = root;
  for (const auto& [key, value] : src.overrides) set_json_path(base, key, value);
  for (const auto& s : src.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + s + "'");
    set_json_path(base, s.substr(0, eq), parse_override_value(s.substr(eq + 1)));
  }
  return run_config_from_json(base);
}

/// A run directory resolves to its final checkpoint.
fs::path checkpoint_dir(const fs::path& p) {
  if (fs::exists(p / "manifest.json") && fs::exists(p / "checkpoints" / "final")) return p / "checkpoints" / "final";
  return p;
}

struct LoadedCheckpoint {
  Checkpoint ck;
  RunConfig cfg;
};

LoadedCheckpoint open_checkpoint(const std::string& path, const ConfigSources& src) {
  LoadedCheckpoint out{load_checkpoint(checkpoint_dir(path)), {}};
  json base = to_json(RunConfig{});
  if (out.ck.context.extra.contains("run")) base = out.ck.context.extra["run"];
  out.cfg = resolve_config(base, src);
  return out;
}

template <class F>
decltype(auto) with_model(Checkpoint& ck, F&& f) {
  if (ck.ms) return f(*ck.ms);
  return f(*ck.single);
}

Stream parse_stream(const std::string& s) {
  if (s == "main") return Stream::main;
  if (s == "ta") return Stream::ta;
  throw ConfigError("unknown stream '" + s + "' (main | ta)");
}

DecoderView view_of(Checkpoint& ck, Stream stream) {
  if (ck.ms) return decoder_view(*ck.ms, stream);
  if (stream == Stream::ta) throw ConfigError("--stream ta needs an MS-Res-TCN checkpoint");
  return decoder_view(*ck.single);
}

const std::vector<SkeletonSequence>& pick_split(const LoadedData& d, const std::string& split) {
  if (split == "train") return d.train;
  if (split == "test") return d.test;
  throw ConfigError("unknown split '" + split + "' (train | test)");
}

/// Samples built with the checkpoint's own mean, length and padding order.
Dataset samples_for(const Checkpoint& ck, const LoadedData& data, const std::vector<SkeletonSequence>& seqs) {
  if (data.layout->dims() != ck.base().input_dim)
    throw ConsistencyError("dataset frame width " + std::to_string(data.layout->dims()) +
                           " does not match checkpoint input width " + std::to_string(ck.base().input_dim));
  return make_dataset(seqs, ck.context.target_T, ck.context.mean, ck.base().num_classes, ck.context.pad_order);
}

fs::path output_dir(const std::string& out, const RunConfig& cfg, const std::string& command) {
  if (!out.empty()) {
    fs::create_directories(out);
    return out;
  }
  return fresh_run_dir(cfg.run_root, command + "-" + timestamp());
}

void write_command_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg, json args) {
  write_json(dir / "manifest.json",
             {{"format", "tcnscope-run"}, {"version", 1}, {"command", command}, {"config", to_json(cfg)}, {"args", args}});
}

std::vector<std::pair<std::size_t, std::string>> find_samples(const std::vector<SkeletonSequence>& seqs,
                                                              const std::vector<std::string>& wanted) {
  std::vector<std::pair<std::size_t, std::string>> out;
  for (const auto& w : wanted) {
    auto it = std::find_if(seqs.begin(), seqs.end(), [&](const SkeletonSequence& s) { return s.name == w; });
    if (it != seqs.end()) {
      out.emplace_back(static_cast<std::size_t>(it - seqs.begin()), w);
      continue;
    }
    std::size_t idx = 0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), idx);
    if (ec != std::errc() || ptr != w.data() + w.size() || idx >= seqs.size())
      throw DataError("unknown sample '" + w + "'");
    out.emplace_back(idx, seqs[idx].name.empty() ? "sample" + std::to_string(idx) : seqs[idx].name);
  }
  return out;
}

/// Recorded bundles of `idx` from the chosen stream.
std::vector<ActivationBundle> record(Checkpoint& ck, const Dataset& data, const std::vector<std::size_t>& idx,
                                     Stream stream) {
  ForwardOptions opt;
  opt.mode = Mode::eval;
  opt.record = true;
  opt.sample_ids = idx;
  const Tensor batch = data.gather(idx);
  if (ck.ms) {
    auto r = ck.ms->forward(batch, opt);
    return stream == Stream::ta ? std::move(r.ta_bundles) : std::move(r.bundles);
  }
  return ck.single->forward(batch, opt).bundles;
}

int cmd_train(const std::string& command, const ConfigSources& src) {
  json base = to_json(RunConfig{});
  if (!src.manifest.empty()) {
    std::string recorded;
    RunConfig prior = run_config_from_manifest(src.manifest, &recorded);
    if (recorded != command)
      throw ConfigError("manifest records a '" + recorded + "' run; rerun it with that subcommand");
    prior.name += "-rerun";
    base = to_json(prior);
  }
  const RunConfig cfg = resolve_config(base, src);
  const auto out = run_training(cfg, command, &std::cerr);
  std::cout << "run directory: " << out.dir.string() << '\n'
            << "final test accuracy: " << std::fixed << std::setprecision(4) << out.final_test.accuracy << '\n'
            << "best epoch: " << out.best_epoch << '\n';
  return kOk;
}

int cmd_eval(const ConfigSources& src, const std::string& ckpt, const std::string& compare, const std::string& split,
             double threshold, const std::string& out_arg) {
  auto a = open_checkpoint(ckpt, src);
  const auto data = load_data(a.cfg);
  const auto& seqs = pick_split(data, split);
  const auto set_a = samples_for(a.ck, data, seqs);
  const auto ra = with_model(a.ck, [&](auto& m) { return evaluate(m, set_a); });

  std::optional<EvalResult> rb;
  if (!compare.empty()) {
    auto b = open_checkpoint(compare, src);
    if (b.ck.base().num_classes != a.ck.base().num_classes)
      throw ConsistencyError("compared checkpoints disagree on the class count");
    const auto set_b = samples_for(b.ck, data, seqs);
    rb = with_model(b.ck, [&](auto& m) { return evaluate(m, set_b); });
  }

  const auto dir = output_dir(out_arg, a.cfg, "eval");
  write_command_manifest(dir, "eval", a.cfg,
                         {{"checkpoint", ckpt}, {"compare", compare}, {"split", split}, {"threshold", threshold}});
  write_confusion_csv(dir / "confusion.csv", ra);
  if (rb) write_confusion_csv(dir / "confusion_compare.csv", *rb);

  CsvTable table;
  table.header = {"class", "samples", "accuracy"};
  if (rb) table.header.insert(table.header.end(), {"accuracy_compare", "delta", "flagged"});
  std::cout << "split " << split << ", " << seqs.size() << " samples\n";
  std::cout << std::fixed << std::setprecision(4) << "overall accuracy: " << ra.accuracy;
  if (rb) std::cout << "  vs " << rb->accuracy << "  (delta " << rb->accuracy - ra.accuracy << ")";
  std::cout << '\n';
  for (std::size_t k = 0; k < ra.per_class.size(); ++k) {
    const auto n = std::accumulate(ra.confusion[k].begin(), ra.confusion[k].end(), std::size_t{0});
    std::vector<std::string> row{std::to_string(k), std::to_string(n), format_double(ra.per_class[k])};
    std::cout << "class " << std::setw(3) << k << "  n=" << std::setw(4) << n << "  " << ra.per_class[k];
    if (rb) {
      const double delta = rb->per_class[k] - ra.per_class[k];
      const bool flagged = n > 0 && delta >= threshold;
      row.insert(row.end(), {format_double(rb->per_class[k]), format_double(delta), flagged ? "1" : "0"});
      std::cout << "  " << rb->per_class[k] << "  " << std::showpos << delta << std::noshowpos << (flagged ? "  *" : "");
    }
    std::cout << '\n';
    table.rows.push_back(std::move(row));
  }
  write_csv(dir / "per_class.csv", table);
  json report{{"split", split}, {"samples", seqs.size()}, {"accuracy", ra.accuracy}, {"loss", ra.loss}};
  if (rb) report["compare"] = {{"accuracy", rb->accuracy}, {"loss", rb->loss}};
  write_json(dir / "report.json", report);
  std::cout << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_decode(const ConfigSources& src, const std::string& ckpt, std::vector<std::string> samples,
               const std::vector<int>& layers, const std::string& split, const std::string& stream_name,
               std::size_t panels, const std::string& out_arg) {
  auto a = open_checkpoint(ckpt, src);
  const Stream stream = parse_stream(stream_name);
  const auto data = load_data(a.cfg);
  const auto& seqs = pick_split(data, split);
  if (samples.empty()) samples.push_back("0");
  for (int l : layers) ResTCNConfig::check_layer(l);
  const auto picked = find_samples(seqs, samples);
  const auto set = samples_for(a.ck, data, seqs);
  std::vector<std::size_t> idx;
  for (const auto& p : picked) idx.push_back(p.first);
  const auto bundles = record(a.ck, set, idx, stream);
  const auto view = view_of(a.ck, stream);
  const auto& layout = *a.ck.context.layout;

  const auto dir = output_dir(out_arg, a.cfg, "decode");
  write_command_manifest(dir, "decode", a.cfg,
                         {{"checkpoint", ckpt}, {"samples", samples}, {"layers", layers}, {"split", split},
                          {"stream", stream_name}});
  for (std::size_t i = 0; i < picked.size(); ++i) {
    const std::string& name = picked[i].second;
    Tensor input = bundles[i].input;
    for (std::size_t t = 0; t < input.extent(0); ++t)
      for (std::size_t d = 0; d < input.extent(1); ++d) input.at(t, d) += a.ck.context.mean.values[d];
    write_frames_csv(dir / (name + "_input.csv"), input, &layout);
    write_strip_svg(dir / (name + "_input.svg"), input, layout, name + " input", strip_frames(input.extent(0), panels));
    for (int l : layers) {
      const auto dec = decode(bundles[i], view, l, a.ck.context.mean);
      const std::string stem = name + "_L" + std::to_string(l);
      write_frames_csv(dir / (stem + ".csv"), dec.frames, &layout);
      write_strip_svg(dir / (stem + ".svg"), dec.frames, layout, name + " decoded from layer " + std::to_string(l),
                      strip_frames(dec.frames.extent(0), panels));
    }
  }
  std::cout << "decoded " << picked.size() << " sample(s) at " << layers.size() << " layer(s) into " << dir.string()
            << '\n';
  return kOk;
}

int cmd_trace(const ConfigSources& src, const std::string& ckpt, int class_id, int layer, std::size_t top_k,
              std::size_t per_class, const std::string& split, const std::string& stream_name,
              const std::string& out_arg) {
  auto a = open_checkpoint(ckpt, src);
  const Stream stream = parse_stream(stream_name);
  ResTCNConfig::check_layer(layer);
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= a.ck.base().num_classes)
    throw ConfigError("class " + std::to_string(class_id) + " outside the model's " +
                      std::to_string(a.ck.base().num_classes) + " classes");
  const auto data = load_data(a.cfg);
  const auto& seqs = pick_split(data, split);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < seqs.size() && idx.size() < per_class; ++i)
    if (seqs[i].label == class_id) idx.push_back(i);
  if (idx.empty()) throw DataError("no " + split + " samples of class " + std::to_string(class_id));
  const auto set = samples_for(a.ck, data, seqs);
  const auto bundles = record(a.ck, set, idx, stream);

  const std::size_t width = bundles.front().layer(layer).extent(1);
  if (top_k > width) {
    std::cerr << "warning: top_k " << top_k << " exceeds the " << width << " filters of layer " << layer
              << "; using " << width << '\n';
    top_k = width;
  }
  std::vector<double> peak(width, 0.0);
  for (const auto& b : bundles) {
    const Tensor& x = b.layer(layer);
    for (std::size_t t = 0; t < x.extent(0); ++t)
      for (std::size_t f = 0; f < width; ++f) peak[f] = std::max(peak[f], std::abs(x.at(t, f)));
  }
  std::vector<std::size_t> order(width);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return peak[i] > peak[j]; });
  order.resize(top_k);

  const auto dir = output_dir(out_arg, a.cfg, "trace");
  write_command_manifest(dir, "trace", a.cfg,
                         {{"checkpoint", ckpt}, {"class", class_id}, {"layer", layer}, {"top_k", top_k},
                          {"samples", per_class}, {"split", split}, {"stream", stream_name}});
  CsvTable chosen;
  chosen.header = {"rank", "filter", "peak"};
  for (std::size_t r = 0; r < order.size(); ++r)
    chosen.rows.push_back({std::to_string(r), std::to_string(order[r]), format_double(peak[order[r]])});
  write_csv(dir / "filters.csv", chosen);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::string name = seqs[idx[i]].name.empty() ? "sample" + std::to_string(idx[i]) : seqs[idx[i]].name;
    write_trace_csv(dir / (name + "_L" + std::to_string(layer) + "_trace.csv"), order,
                    response_trace(bundles[i], layer, order));
  }
  std::cout << "traced " << idx.size() << " sample(s) of class " << class_id << ", " << order.size()
            << " filter(s) at layer " << layer << " into " << dir.string() << '\n';
  return kOk;
}

int cmd_filters(const ConfigSources& src, const std::string& ckpt, std::vector<std::size_t> ids,
                const std::string& stream_name, const std::string& out_arg) {
  auto a = open_checkpoint(ckpt, src);
  const auto view = view_of(a.ck, parse_stream(stream_name));
  if (!a.ck.context.layout) throw DataError("checkpoint has no skeleton layout to render with");
  const std::size_t count = view.stack.conv1.value.extent(0);
  if (ids.empty()) {
    ids.resize(count);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
  }
  const auto dir = output_dir(out_arg, a.cfg, "filters");
  write_command_manifest(dir, "filters", a.cfg, {{"checkpoint", ckpt}, {"ids", ids}, {"stream", stream_name}});
  for (auto id : ids) {
    const auto s = filter_to_skeleton(view, id, a.ck.context.mean, a.ck.context.layout);
    write_frames_csv(dir / (s.name + ".csv"), s.frames, s.layout.get());
    write_strip_svg(dir / (s.name + ".svg"), s.frames, *s.layout, "first-layer filter " + std::to_string(id));
  }
  std::cout << "rendered " << ids.size() << " filter(s) into " << dir.string() << '\n';
  return kOk;
}

int cmd_synth(const ConfigSources& src, const std::string& out_arg, bool csv) {
  RunConfig cfg = resolve_config(to_json(RunConfig{}), src);
  SyntheticSpec spec = cfg.synthetic;
  if (spec.fine_dims.kept_dims.empty()) spec.fine_dims = SyntheticSpec::default_fine_dims(spec.joints);
  const auto data = synth_generate(spec);
  const auto dir = output_dir(out_arg, cfg, "synth");
  SequenceCache cache;
  cache.num_classes = spec.num_classes;
  cache.extra = {{"synthetic", to_json(spec)}, {"confusable", data.confusable}};
  for (const auto& s : data.train) {
    cache.sequences.push_back(s);
    cache.splits.push_back("train");
  }
  for (const auto& s : data.test) {
    cache.sequences.push_back(s);
    cache.splits.push_back("test");
  }
  save_sequence_cache(dir, cache);
  write_json(dir / "fine_mask.json", to_json(spec.fine_dims));
  if (csv)
    for (std::size_t i = 0; i < cache.sequences.size(); ++i)
      write_sequence_csv(dir / "csv" / cache.splits[i] / (cache.sequences[i].name + ".csv"), cache.sequences[i]);
  std::cout << "wrote " << data.train.size() << " train and " << data.test.size() << " test sequences to "
            << dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Res-TCN training, feature-map decoding and targeted refinement for skeleton action recognition"};
  app.require_subcommand(1);

  ConfigSources src;
  std::string ckpt, compare, split = "test", stream = "main", out;
  double threshold = 0.05;
  std::vector<std::string> samples;
  std::vector<int> layers{1, 4, 7, 10};
  std::vector<std::size_t> ids;
  int class_id = 0, layer = 10;
  std::size_t top_k = 5, per_class = 5, panels = 8;
  bool csv = false;

  auto* train = app.add_subcommand("train", "train a Res-TCN into a new run directory");
  auto* refine = app.add_subcommand("refine", "train an MS-Res-TCN with a targeted mask");
  for (auto* sub : {train, refine}) {
    add_config_options(sub, src);
    add_flags(sub, src, kTrainFlags);
    sub->add_option("--manifest", src.manifest, "rerun the configuration recorded in a run manifest");
  }
  add_flags(refine, src, kRefineFlags);

  auto* eval = app.add_subcommand("eval", "accuracy report, per-class table and confusion counts");
  eval->add_option("--compare", compare, "second checkpoint for a side-by-side report");
  eval->add_option("--threshold", threshold, "per-class improvement flagged in side-by-side mode");

  auto* decode_cmd = app.add_subcommand("decode", "decode hidden activations back to skeleton sequences");
  decode_cmd->add_option("--samples", samples, "sample names or indices within the split (default: 0)");
  decode_cmd->add_option("--layers", layers, "layers to decode")->delimiter(',');
  decode_cmd->add_option("--panels", panels, "frames drawn per SVG strip");

  auto* trace = app.add_subcommand("trace", "filter response magnitudes over time for one class");
  trace->add_option("--class", class_id, "class id")->required();
  trace->add_option("--layer", layer, "layer to trace");
  trace->add_option("--top-k", top_k, "filters with the highest peak response");
  trace->add_option("--samples", per_class, "samples of the class to trace");

  auto* filters = app.add_subcommand("filters", "render first-layer filters as short skeleton sequences");
  filters->add_option("--ids", ids, "filter ids (default: all)")->delimiter(',');

  for (auto* sub : {eval, decode_cmd, trace, filters}) {
    sub->add_option("--checkpoint", ckpt, "checkpoint or run directory")->required();
    sub->add_option("-o,--out", out, "output directory (default: a new directory under the run root)");
    add_config_options(sub, src);
  }
  for (auto* sub : {eval, decode_cmd, trace}) sub->add_option("--split", split, "train | test");
  for (auto* sub : {decode_cmd, trace, filters}) sub->add_option("--stream", stream, "main | ta (MS checkpoints)");

  auto* synth = app.add_subcommand("synth", "generate the synthetic fine-motion dataset as a sequence cache");
  add_config_options(synth, src);
  synth->add_option("-o,--out", out, "output directory");
  synth->add_flag("--csv", csv, "also write one CSV (plus sidecar) per sequence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (train->parsed()) return cmd_train("train", src);
    if (refine->parsed()) return cmd_train("refine", src);
    if (eval->parsed()) return cmd_eval(src, ckpt, compare, split, threshold, out);
    if (decode_cmd->parsed()) return cmd_decode(src, ckpt, samples, layers, split, stream, panels, out);
    if (trace->parsed()) return cmd_trace(src, ckpt, class_id, layer, top_k, per_class, split, stream, out);
    if (filters->parsed()) return cmd_filters(src, ckpt, ids, stream, out);
    if (synth->parsed()) return cmd_synth(src, out, csv);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}

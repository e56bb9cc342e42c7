#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tcnscope/config_json.hpp"
#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/error.hpp"
#include "tcnscope/serialize.hpp"

namespace tcnscope {

/**
 * On-disk sequence collection:
 *   <dir>/manifest.json  layout, class count, per-sequence name/label/meta/length/split
 *   <dir>/frames.bin     every sequence's frames stacked, (sum of lengths)×D
 */
struct SequenceCache {
  std::vector<SkeletonSequence> sequences;
  /// "train", "test" or empty per sequence
  std::vector<std::string> splits;
  std::size_t num_classes = 0;
  json extra = json::object();
};

inline void save_sequence_cache(const std::filesystem::path& dir, const SequenceCache& cache) {
  if (cache.sequences.empty()) throw DataError("sequence cache: nothing to save");
  const auto& layout = cache.sequences.front().layout;
  if (!layout) throw DataError("sequence cache: sequences need a layout");
  const std::size_t D = layout->dims();
  std::size_t total = 0;
  for (const auto& s : cache.sequences) {
    if (s.frames.extent(1) != D) throw ShapeError("sequence cache: inconsistent frame width");
    total += s.length();
  }
  Tensor frames({total, D});
  json entries = json::array();
  std::size_t offset = 0;
  for (std::size_t i = 0; i < cache.sequences.size(); ++i) {
    const auto& s = cache.sequences[i];
    std::copy_n(s.frames.data(), s.frames.size(), frames.data() + offset * D);
    entries.push_back({{"name", s.name},
                       {"label", s.label},
                       {"length", s.length()},
                       {"split", i < cache.splits.size() ? cache.splits[i] : ""},
                       {"meta", to_json(s.meta)}});
    offset += s.length();
  }
  std::filesystem::create_directories(dir);
  save_tensor(dir / "frames.bin", frames);
  json manifest{{"format", "tcnscope-sequences"}, {"version", 1},         {"layout", to_json(*layout)},
                {"num_classes", cache.num_classes}, {"dims", D},          {"total_frames", total},
                {"sequences", entries},            {"extra", cache.extra}};
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(1) << '\n';
  if (!out) throw DataError("sequence cache: cannot write manifest in " + dir.string());
}

inline SequenceCache load_sequence_cache(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("sequence cache: no manifest.json in " + dir.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("sequence cache manifest: " + std::string(e.what()));
  }
  if (m.value("format", "") != "tcnscope-sequences") throw DataError("sequence cache: unrecognized manifest format");
  auto layout = std::make_shared<const SkeletonLayout>(layout_from_json(m.at("layout")));
  const Tensor frames = load_tensor(dir / "frames.bin");
  const std::size_t D = layout->dims();
  if (frames.rank() != 2 || frames.extent(1) != D || frames.extent(0) != m.at("total_frames").get<std::size_t>())
    throw DataError("sequence cache: frames.bin does not match manifest");
  SequenceCache cache;
  cache.num_classes = m.at("num_classes").get<std::size_t>();
  cache.extra = m.value("extra", json::object());
  std::size_t offset = 0;
  for (const auto& e : m.at("sequences")) {
    SkeletonSequence s;
    s.name = e.at("name").get<std::string>();
    s.label = e.at("label").get<int>();
    s.meta = meta_from_json(e.at("meta"));
    s.layout = layout;
    const std::size_t T = e.at("length").get<std::size_t>();
    if (offset + T > frames.extent(0)) throw DataError("sequence cache: lengths exceed stored frames");
    s.frames = Tensor({T, D}, std::vector<double>(frames.data() + offset * D, frames.data() + (offset + T) * D));
    offset += T;
    cache.sequences.push_back(std::move(s));
    cache.splits.push_back(e.value("split", ""));
  }
  return cache;
}

}  // namespace tcnscope

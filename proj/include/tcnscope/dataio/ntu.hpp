#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <cstddef>
#include <istream>
#include <memory>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/error.hpp"
#include "tcnscope/msnet.hpp"

namespace tcnscope {

namespace detail {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::size_t line() const { return line_; }

  std::vector<std::string> tokens(const char* what) {
    std::string text;
    while (true) {
      if (!std::getline(in_, text)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_ + 1);
      ++line_;
      std::istringstream ss(text);
      std::vector<std::string> out;
      for (std::string tok; ss >> tok;) out.push_back(std::move(tok));
      if (!out.empty()) return out;
    }
  }

  double number(const std::string& tok) const {
    double v = 0.0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError("non-numeric token '" + tok + "'", line_);
    return v;
  }

  long integer(const std::string& tok) const {
    long v = 0;
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError("expected an integer, got '" + tok + "'", line_);
    return v;
  }

  long single_integer(const char* what) {
    auto t = tokens(what);
    if (t.size() != 1) throw ParseError(std::string("expected a single ") + what, line_);
    return integer(t[0]);
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace detail

/**
 * Parse one NTU RGB+D `.skeleton` text file into flattened 150-dim frames.
 * Bodies fill the two actor slots in encounter order; frames with no body
 * are all zeros, bodies past the second are skipped with a warning.
 */
inline SkeletonSequence parse_ntu_skeleton(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  static const auto layout = std::make_shared<const SkeletonLayout>(SkeletonLayout::ntu());
  detail::LineReader r(in);
  const long frames = r.single_integer("frame count");
  if (frames <= 0) throw ParseError("empty sequence: frame count " + std::to_string(frames), r.line());
  const std::size_t J = layout->joints();
  SkeletonSequence seq;
  seq.layout = layout;
  seq.frames = Tensor({static_cast<std::size_t>(frames), layout->dims()});
  std::size_t dropped_frames = 0;
  for (long t = 0; t < frames; ++t) {
    const long bodies = r.single_integer("body count");
    if (bodies < 0) throw ParseError("negative body count", r.line());
    if (bodies > static_cast<long>(layout->actor_slots)) ++dropped_frames;
    for (long b = 0; b < bodies; ++b) {
      r.tokens("body info line");
      const long joints = r.single_integer("joint count");
      if (joints != static_cast<long>(J))
        throw ParseError("joint count " + std::to_string(joints) + ", expected " + std::to_string(J), r.line());
      for (std::size_t j = 0; j < J; ++j) {
        auto tok = r.tokens("joint line");
        if (tok.size() < 3) throw ParseError("joint line has " + std::to_string(tok.size()) + " values", r.line());
        double xyz[3];
        for (std::size_t k = 0; k < tok.size(); ++k) {
          const double v = r.number(tok[k]);
          if (k < 3) xyz[k] = v;
        }
        if (b < static_cast<long>(layout->actor_slots)) {
          const std::size_t d = layout->dim_index(static_cast<std::size_t>(b), j, 0);
          for (std::size_t a = 0; a < 3; ++a) seq.frames.at(static_cast<std::size_t>(t), d + a) = xyz[a];
        }
      }
    }
  }
  if (dropped_frames > 0 && warnings)
    warnings->push_back(std::to_string(dropped_frames) + " frame(s) had more than " +
                        std::to_string(layout->actor_slots) + " bodies; extra bodies ignored");
  return seq;
}

/// S***C***P***R***A*** -> setup, camera, performer, replication, action.
inline SequenceMeta parse_ntu_filename(const std::string& name) {
  static const std::regex pattern(R"(S(\d{3})C(\d{3})P(\d{3})R(\d{3})A(\d{3}))");
  std::smatch m;
  if (!std::regex_search(name, m, pattern)) throw ParseError("file name '" + name + "' does not match S###C###P###R###A###", 0);
  return {std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), std::stoi(m[4]), std::stoi(m[5])};
}

/// Every `*.skeleton` file under `dir`, sorted by name; label = action id - 1.
inline std::vector<SkeletonSequence> load_ntu_directory(const std::filesystem::path& dir,
                                                        std::vector<std::string>* warnings = nullptr) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".skeleton") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .skeleton files in " + dir.string());
  std::vector<SkeletonSequence> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::vector<std::string> w;
    SkeletonSequence s;
    try {
      s = parse_ntu_skeleton(in, &w);
      s.meta = parse_ntu_filename(f.stem().string());
    } catch (const ParseError& e) {
      throw ParseError(f.filename().string() + ": " + e.what(), 0);
    }
    s.name = f.stem().string();
    s.label = s.meta.action - 1;
    if (warnings)
      for (auto& msg : w) warnings->push_back(s.name + ": " + msg);
    out.push_back(std::move(s));
  }
  return out;
}

/// Recording angle of an NTU camera id, in degrees.
inline int ntu_camera_angle(int camera) {
  switch (camera) {
    case 1: return -45;
    case 2: return 0;
    case 3: return 45;
    default: throw ParameterError("unknown NTU camera id " + std::to_string(camera));
  }
}

inline const std::vector<int>& ntu_cross_subject_train_ids() {
  static const std::vector<int> ids{1, 2, 4, 5, 8, 9, 13, 14, 15, 16, 17, 18, 19, 25, 27, 28, 31, 34, 35, 38};
  return ids;
}

inline const std::vector<int>& ntu_cross_view_train_cameras() {
  static const std::vector<int> ids{2, 3};
  return ids;
}

/// Dimensions of the given joints in every actor slot and axis, ascending.
inline MaskSpec mask_for_joints(const SkeletonLayout& layout, const std::vector<std::string>& joints,
                                std::string provenance = {}) {
  std::vector<char> keep(layout.dims(), 0);
  for (const auto& name : joints) {
    auto j = layout.joint_index(name);
    if (!j) throw ConfigError("mask: unknown joint '" + name + "' for layout " + layout.name);
    for (std::size_t a = 0; a < layout.actor_slots; ++a)
      for (std::size_t ax = 0; ax < 3; ++ax) keep[layout.dim_index(a, *j, ax)] = 1;
  }
  MaskSpec m;
  m.provenance = std::move(provenance);
  for (std::size_t d = 0; d < keep.size(); ++d)
    if (keep[d]) m.kept_dims.push_back(d);
  return m;
}

/// Hand tips and thumbs of both actors: 24 of 150 dims.
inline MaskSpec ntu_hand_mask() {
  return mask_for_joints(SkeletonLayout::ntu(), {"HandTipLeft", "ThumbLeft", "HandTipRight", "ThumbRight"},
                         "hand tips and thumbs");
}

}  // namespace tcnscope

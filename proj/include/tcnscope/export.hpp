#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "tcnscope/config_json.hpp"
#include "tcnscope/dataio/skeleton.hpp"
#include "tcnscope/error.hpp"
#include "tcnscope/tensor.hpp"
#include "tcnscope/training.hpp"

namespace tcnscope {

namespace fs = std::filesystem;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw ParseError("not a number: '" + s + "'", line);
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("csv: no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }

  double number(std::size_t row, std::size_t col) const { return parse_double(rows.at(row).at(col), row + 2); }
};

inline std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

/// Plain comma-separated values; fields never contain commas or quotes.
inline void write_csv(const fs::path& path, const CsvTable& table) {
  auto out = open_output(path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].find_first_of(",\n\"") != std::string::npos) throw DataError("csv: field contains a separator");
      out << (i ? "," : "") << cells[i];
    }
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  if (!out) throw DataError("write failed: " + path.string());
}

inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  CsvTable t;
  std::string text;
  std::size_t lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, text)) {
    ++lineno;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    auto cells = split(text);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ParseError("expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(cells.size()),
                       lineno);
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw DataError("csv: empty file " + path.string());
  return t;
}

inline std::vector<std::string> dim_header(const SkeletonLayout* layout, std::size_t D) {
  std::vector<std::string> h;
  for (std::size_t d = 0; d < D; ++d) h.push_back(layout && layout->dims() == D ? layout->dim_name(d) : "d" + std::to_string(d));
  return h;
}

/// T×D frames: header "frame,<dim names>", one row per frame.
inline void write_frames_csv(const fs::path& path, const Tensor& frames, const SkeletonLayout* layout) {
  require_rank(frames, 2, "write_frames_csv");
  CsvTable t;
  t.header.push_back("frame");
  for (auto& h : dim_header(layout, frames.extent(1))) t.header.push_back(h);
  for (std::size_t r = 0; r < frames.extent(0); ++r) {
    std::vector<std::string> row{std::to_string(r)};
    for (std::size_t d = 0; d < frames.extent(1); ++d) row.push_back(format_double(frames.at(r, d)));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

inline Tensor read_frames_csv(const fs::path& path, std::vector<std::string>* header = nullptr) {
  auto t = read_csv(path);
  if (t.header.size() < 2 || t.header[0] != "frame") throw DataError("frames csv: expected 'frame' as first column");
  if (t.rows.empty()) throw DataError("frames csv: no frames in " + path.string());
  const std::size_t D = t.header.size() - 1;
  Tensor frames({t.rows.size(), D});
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t d = 0; d < D; ++d) frames.at(r, d) = t.number(r, d + 1);
  if (header) header->assign(t.header.begin() + 1, t.header.end());
  return frames;
}

inline fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

/// Sequence as CSV frames plus a JSON sidecar holding label, metadata and layout.
inline void write_sequence_csv(const fs::path& path, const SkeletonSequence& seq) {
  write_frames_csv(path, seq.frames, seq.layout.get());
  json side{{"name", seq.name}, {"label", seq.label}, {"meta", to_json(seq.meta)}};
  if (seq.layout) side["layout"] = to_json(*seq.layout);
  auto out = open_output(sidecar_path(path));
  out << side.dump(2) << '\n';
}

inline SkeletonSequence read_sequence_csv(const fs::path& path) {
  std::ifstream in(sidecar_path(path));
  if (!in) throw DataError("missing sidecar metadata " + sidecar_path(path).string());
  json side;
  try {
    side = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("sidecar " + sidecar_path(path).string() + ": " + e.what());
  }
  SkeletonSequence s;
  std::vector<std::string> header;
  s.frames = read_frames_csv(path, &header);
  s.name = side.value("name", path.stem().string());
  s.label = side.value("label", 0);
  if (side.contains("meta")) s.meta = meta_from_json(side["meta"]);
  if (!side.contains("layout")) throw DataError("sidecar " + sidecar_path(path).string() + " has no layout");
  s.layout = std::make_shared<const SkeletonLayout>(layout_from_json(side["layout"]));
  if (header != dim_header(s.layout.get(), s.layout->dims()))
    throw DataError("csv header of " + path.string() + " does not match layout '" + s.layout->name + "'");
  return s;
}

inline void write_history_csv(const fs::path& path, const History& h) {
  CsvTable t;
  t.header = {"epoch", "learning_rate", "train_loss", "train_accuracy", "test_loss", "test_accuracy"};
  for (const auto& e : h.epochs)
    t.rows.push_back({std::to_string(e.epoch), format_double(e.learning_rate), format_double(e.train_loss),
                      format_double(e.train_accuracy), format_double(e.test_loss), format_double(e.test_accuracy)});
  write_csv(path, t);
}

inline History read_history_csv(const fs::path& path) {
  auto t = read_csv(path);
  const std::size_t c[] = {t.column("epoch"),     t.column("learning_rate"), t.column("train_loss"),
                           t.column("train_accuracy"), t.column("test_loss"), t.column("test_accuracy")};
  History h;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    h.epochs.push_back({static_cast<int>(t.number(r, c[0])), t.number(r, c[1]), t.number(r, c[2]), t.number(r, c[3]),
                        t.number(r, c[4]), t.number(r, c[5])});
  return h;
}

/// Rows are true classes, columns predicted classes.
inline void write_confusion_csv(const fs::path& path, const EvalResult& r) {
  CsvTable t;
  t.header.push_back("true");
  for (std::size_t k = 0; k < r.confusion.size(); ++k) t.header.push_back("pred" + std::to_string(k));
  for (std::size_t k = 0; k < r.confusion.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (auto v : r.confusion[k]) row.push_back(std::to_string(v));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

/// One (filter, time) response series per column: "frame,f<id>,...".
inline void write_trace_csv(const fs::path& path, const std::vector<std::size_t>& filters,
                            const std::vector<std::vector<double>>& series) {
  CsvTable t;
  t.header.push_back("frame");
  for (auto f : filters) t.header.push_back("f" + std::to_string(f));
  const std::size_t T = series.empty() ? 0 : series.front().size();
  for (std::size_t s = 0; s < T; ++s) {
    std::vector<std::string> row{std::to_string(s)};
    for (const auto& v : series) row.push_back(format_double(v[s]));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

/**
 * Frames drawn left to right as orthographic x-y stick figures, all panels
 * sharing one scale. `frame_ids` selects frames (all when empty).
 */
inline void write_strip_svg(const fs::path& path, const Tensor& frames, const SkeletonLayout& layout,
                            const std::string& title, std::vector<std::size_t> frame_ids = {}) {
  require_rank(frames, 2, "write_strip_svg");
  if (frames.extent(1) != layout.dims()) throw ConsistencyError("svg: frame width does not match layout");
  if (frame_ids.empty())
    for (std::size_t t = 0; t < frames.extent(0); ++t) frame_ids.push_back(t);
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (auto t : frame_ids)
    for (std::size_t a = 0; a < layout.actor_slots; ++a)
      for (std::size_t j = 0; j < layout.joints(); ++j) {
        const double x = frames.at(t, layout.dim_index(a, j, 0)), y = frames.at(t, layout.dim_index(a, j, 1));
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
  const double panel = 160.0, margin = 10.0;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-9});
  const double scale = (panel - 2 * margin) / span;
  const double width = panel * static_cast<double>(frame_ids.size()), height = panel + 24.0;
  auto out = open_output(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"4\" y=\"16\" font-family=\"monospace\" font-size=\"12\">" << title << "</text>\n";
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t p = 0; p < frame_ids.size(); ++p) {
    const std::size_t t = frame_ids[p];
    const double ox = panel * static_cast<double>(p);
    auto px = [&](double x) { return ox + margin + (x - xmin) * scale; };
    auto py = [&](double y) { return 24.0 + panel - margin - (y - ymin) * scale; };
    out << "<g>\n<text x=\"" << ox + 4 << "\" y=\"" << height - 4
        << "\" font-family=\"monospace\" font-size=\"10\">t=" << t << "</text>\n";
    for (std::size_t a = 0; a < layout.actor_slots; ++a) {
      const char* c = colors[a % 4];
      for (auto [j0, j1] : layout.bones) {
        const std::size_t d0 = layout.dim_index(a, j0, 0), d1 = layout.dim_index(a, j1, 0);
        out << "<line x1=\"" << px(frames.at(t, d0)) << "\" y1=\"" << py(frames.at(t, d0 + 1)) << "\" x2=\""
            << px(frames.at(t, d1)) << "\" y2=\"" << py(frames.at(t, d1 + 1)) << "\" stroke=\"" << c
            << "\" stroke-width=\"1.5\"/>\n";
      }
      for (std::size_t j = 0; j < layout.joints(); ++j) {
        const std::size_t d = layout.dim_index(a, j, 0);
        out << "<circle cx=\"" << px(frames.at(t, d)) << "\" cy=\"" << py(frames.at(t, d + 1))
            << "\" r=\"2\" fill=\"" << c << "\"/>\n";
      }
    }
    out << "</g>\n";
  }
  out << "</svg>\n";
}

/// At most `panels` evenly spaced frame indices of a T-frame sequence, first and last included.
inline std::vector<std::size_t> strip_frames(std::size_t T, std::size_t panels) {
  std::vector<std::size_t> ids;
  if (T <= panels || panels < 2) {
    for (std::size_t t = 0; t < T; ++t) ids.push_back(t);
    return ids;
  }
  for (std::size_t k = 0; k < panels; ++k) ids.push_back(k * (T - 1) / (panels - 1));
  return ids;
}

}  // namespace tcnscope

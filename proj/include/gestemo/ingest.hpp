/*
 * Copyright 2026 The gestemo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gestemo/error.hpp"
#include "gestemo/event_core.hpp"

namespace gestemo {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Frame feature sequences

/// N x D row-major matrix of per-frame feature vectors.
class FrameFeatureSequence {
 public:
  FrameFeatureSequence() = default;
  FrameFeatureSequence(std::size_t dim, std::vector<double> values)
      : dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw Error(ErrorKind::DimMismatch, "feature dimension must be >= 1");
    if (values_.size() % dim_ != 0) {
      throw Error(ErrorKind::RaggedRows, "value count not a multiple of D");
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t frames() const { return dim_ == 0 ? 0 : values_.size() / dim_; }
  std::span<const double> frame(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * dim_, dim_);
  }
  std::span<const double> values() const { return values_; }
  bool operator==(const FrameFeatureSequence&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

inline constexpr std::size_t kDefaultMaxFrames = 100;

/// Truncates to the first `max_frames` frames; when `pad` is set, shorter
/// sequences get leading zero frames so the real frames end the sequence.
inline FrameFeatureSequence fit_frames(const FrameFeatureSequence& seq,
                                       std::size_t max_frames = kDefaultMaxFrames,
                                       bool pad = true) {
  const std::size_t d = seq.dim();
  const std::size_t n = seq.frames();
  if (max_frames == 0) return seq;
  if (n >= max_frames) {
    auto v = seq.values();
    return FrameFeatureSequence(d, std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(max_frames * d)));
  }
  if (!pad) return seq;
  std::vector<double> out((max_frames - n) * d, 0.0);
  out.insert(out.end(), seq.values().begin(), seq.values().end());
  return FrameFeatureSequence(d, std::move(out));
}

struct SampleRecord {
  std::string id;
  GestureClass gesture = GestureClass::other;
  std::optional<EmotionClass> emotion;
  EventStream events;
  std::optional<FrameFeatureSequence> features;
};

// ---------------------------------------------------------------------------
// Text helpers

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || s.empty()) return std::nullopt;
  return value;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::ifstream open_input(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

inline std::optional<Geometry> parse_geometry(std::string_view text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string_view::npos) return std::nullopt;
  auto w = parse_number<std::uint32_t>(text.substr(0, x));
  auto h = parse_number<std::uint32_t>(text.substr(x + 1));
  if (!w || !h) return std::nullopt;
  return Geometry{*w, *h};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Event files: "t,x,y,p geometry=WxH" header, then one "t,x,y,p" row per event.

inline EventStream parse_events(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::ParseError, source + ": missing header", 1);
  }
  const auto header = detail::trim(line);
  const auto gpos = header.find("geometry=");
  if (header.substr(0, 7) != "t,x,y,p" || gpos == std::string_view::npos) {
    throw Error(ErrorKind::ParseError, source + ": bad header '" + std::string(header) + "'", 1);
  }
  const auto geometry = detail::parse_geometry(header.substr(gpos + 9));
  if (!geometry) throw Error(ErrorKind::ParseError, source + ": bad geometry", 1);

  std::vector<Event> events;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = detail::trim(line);
    if (row.empty()) continue;
    const auto fields = detail::split(row, ',');
    if (fields.size() != 4) {
      throw Error(ErrorKind::ParseError,
                  source + ": line " + std::to_string(line_no) + ": expected 4 fields", line_no);
    }
    std::int64_t vals[4];
    for (int i = 0; i < 4; ++i) {
      auto v = detail::parse_number<std::int64_t>(fields[static_cast<std::size_t>(i)]);
      if (!v) {
        throw Error(ErrorKind::ParseError,
                    source + ": line " + std::to_string(line_no) + ": bad integer '" +
                        std::string(fields[static_cast<std::size_t>(i)]) + "'",
                    line_no);
      }
      vals[i] = *v;
    }
    events.push_back(make_event(vals[0], vals[1], vals[2], vals[3], *geometry));
  }
  return validate_stream(std::move(events), *geometry);
}

inline EventStream read_events_file(const fs::path& path) {
  auto in = detail::open_input(path);
  return parse_events(in, path.string());
}

inline void write_events(std::ostream& out, const EventStream& stream) {
  out << "t,x,y,p geometry=" << stream.geometry().width << 'x'
      << stream.geometry().height << '\n';
  for (const Event& e : stream) {
    out << e.t << ',' << e.x << ',' << e.y << ',' << int{e.p} << '\n';
  }
}

inline void write_events_file(const EventStream& stream, const fs::path& path) {
  auto out = detail::open_output(path);
  write_events(out, stream);
  if (!out.flush()) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Feature files: "D=<int>" header, then one whitespace-separated row per frame.

inline FrameFeatureSequence parse_features(std::istream& in, const std::string& source = "<stream>") {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, source + ": missing header", 1);
  const auto header = detail::trim(line);
  if (header.substr(0, 2) != "D=") {
    throw Error(ErrorKind::ParseError, source + ": header must be D=<int>", 1);
  }
  const auto dim = detail::parse_number<std::size_t>(header.substr(2));
  if (!dim || *dim == 0) throw Error(ErrorKind::ParseError, source + ": bad dimension", 1);

  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::istringstream row(line);
    std::string token;
    std::size_t count = 0;
    while (row >> token) {
      auto v = detail::parse_number<double>(token);
      if (!v) {
        throw Error(ErrorKind::ParseError,
                    source + ": line " + std::to_string(line_no) + ": bad real '" + token + "'",
                    line_no);
      }
      values.push_back(*v);
      ++count;
    }
    if (count != *dim) {
      throw Error(ErrorKind::RaggedRows,
                  source + ": line " + std::to_string(line_no) + " has " + std::to_string(count) +
                      " values, expected " + std::to_string(*dim),
                  line_no);
    }
  }
  if (values.empty()) throw Error(ErrorKind::ParseError, source + ": no frames");
  return FrameFeatureSequence(*dim, std::move(values));
}

inline FrameFeatureSequence read_feature_file(const fs::path& path) {
  auto in = detail::open_input(path);
  return parse_features(in, path.string());
}

inline void write_feature_file(const FrameFeatureSequence& seq, const fs::path& path) {
  auto out = detail::open_output(path);
  out << "D=" << seq.dim() << '\n';
  for (std::size_t i = 0; i < seq.frames(); ++i) {
    const auto row = seq.frame(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << detail::format_double(row[j]);
    }
    out << '\n';
  }
  if (!out.flush()) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Manifests

enum class Split { train, test };

inline std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  return std::nullopt;
}

struct ManifestEntry {
  std::string id;
  GestureClass gesture = GestureClass::other;
  std::string events;                  // relative to the manifest root
  std::optional<std::string> features;
  Split split = Split::train;
};

struct SplitManifest {
  fs::path root;
  std::vector<ManifestEntry> entries;

  const ManifestEntry* find(std::string_view id) const {
    for (const auto& e : entries) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }

  std::vector<const ManifestEntry*> in_split(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries) {
      if (e.split == s) out.push_back(&e);
    }
    return out;
  }

  fs::path resolve(const std::string& relative) const {
    const fs::path p(relative);
    return p.is_absolute() ? p : root / p;
  }
};

inline nlohmann::json manifest_to_json(const SplitManifest& m, const std::string& root_field = ".") {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : m.entries) {
    nlohmann::json j = {{"id", e.id},
                        {"gesture", std::string(to_string(e.gesture))},
                        {"events", e.events},
                        {"split", std::string(to_string(e.split))}};
    if (e.features) j["features"] = *e.features;
    entries.push_back(std::move(j));
  }
  return nlohmann::json{{"root", root_field}, {"entries", std::move(entries)}};
}

/// Parses a manifest document. `base` anchors a relative "root" field
/// (normally the manifest file's directory).
inline SplitManifest parse_manifest(const nlohmann::json& doc, const fs::path& base) {
  SplitManifest m;
  try {
    const std::string root = doc.value("root", std::string("."));
    m.root = fs::path(root).is_absolute() ? fs::path(root) : base / root;
    m.root = m.root.lexically_normal();
    std::set<std::string> seen;
    for (const auto& j : doc.at("entries")) {
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      const auto label = j.at("gesture").get<std::string>();
      const auto g = parse_gesture(label);
      if (!g) throw Error(ErrorKind::UnknownLabel, "gesture '" + label + "' in entry " + e.id);
      e.gesture = *g;
      e.events = j.at("events").get<std::string>();
      if (j.contains("features") && !j.at("features").is_null()) {
        e.features = j.at("features").get<std::string>();
      }
      const auto split = parse_split(j.value("split", std::string("train")));
      if (!split) throw Error(ErrorKind::ParseError, "bad split in entry " + e.id);
      e.split = *split;
      if (!seen.insert(e.id).second) throw Error(ErrorKind::DuplicateId, "duplicate id " + e.id);
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::ParseError, std::string("manifest: ") + ex.what());
  }
  return m;
}

inline SplitManifest read_manifest(const fs::path& path) {
  auto in = detail::open_input(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + ex.what());
  }
  return parse_manifest(doc, path.parent_path());
}

inline void write_manifest(const SplitManifest& m, const fs::path& path,
                           const std::string& root_field = ".") {
  auto out = detail::open_output(path);
  out << manifest_to_json(m, root_field).dump(2) << '\n';
  if (!out.flush()) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

inline SampleRecord load_sample(const SplitManifest& manifest, std::string_view id) {
  const ManifestEntry* entry = manifest.find(id);
  if (!entry) throw Error(ErrorKind::UnknownId, "no sample '" + std::string(id) + "'");
  const auto event_path = manifest.resolve(entry->events);
  if (!fs::exists(event_path)) throw Error(ErrorKind::MissingFile, event_path.string());

  SampleRecord rec;
  rec.id = entry->id;
  rec.gesture = entry->gesture;
  rec.emotion = emotion_of(entry->gesture);
  rec.events = read_events_file(event_path);
  if (entry->features) {
    const auto feature_path = manifest.resolve(*entry->features);
    if (!fs::exists(feature_path)) throw Error(ErrorKind::MissingFile, feature_path.string());
    rec.features = read_feature_file(feature_path);
  }
  return rec;
}

}  // namespace gestemo

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <cstdio>
#include <string>
#include <vector>

#include "gestemo/error.hpp"
#include "gestemo/event_core.hpp"
#include "gestemo/ingest.hpp"

namespace gestemo {

namespace detail {

inline std::mt19937_64 dataset_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

/// Writes via a sibling temp file and renames, so readers never see a half
/// written manifest.
inline void write_manifest_atomic(const SplitManifest& m, const fs::path& path) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_manifest(m, tmp);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "rename " + tmp.string() + ": " + ec.message());
}

/// Per class: shuffled positions [0, n) of which the first `n_test` go to test.
inline std::vector<Split> stratified_split(std::size_t n, std::size_t n_test, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Split> out(n, Split::train);
  for (std::size_t i = 0; i < std::min(n_test, n); ++i) out[order[i]] = Split::test;
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Synthetic labeled dataset

struct SynthDatasetSpec {
  std::vector<GestureClass> classes{GestureClass::ok, GestureClass::no, GestureClass::victory};
  std::size_t per_class = 20;
  std::size_t test_per_class = 0;
  Geometry geometry{32, 32};
  std::int64_t duration_us = 1'000'000;
  std::int64_t n_events = 1200;
  double noise_fraction = 0.05;
  double jitter = 0.05;
  bool with_features = true;
  std::size_t feature_dim = 16;
  std::size_t min_frames = 20;
  std::size_t max_frames = 40;
  double feature_noise = 0.6;
  // Disjoint per-class fractions of samples whose events (resp. features)
  // carry no class signal: a noise-only event pattern, or blank frames.
  double corrupt_events = 0.1;
  double corrupt_features = 0.1;

  void validate() const {
    if (classes.empty()) throw Error(ErrorKind::BadSpec, "no classes");
    if (per_class == 0) throw Error(ErrorKind::BadSpec, "per_class must be >= 1");
    if (test_per_class > per_class) throw Error(ErrorKind::BadSpec, "test_per_class > per_class");
    if (with_features && feature_dim == 0) throw Error(ErrorKind::BadSpec, "feature_dim must be >= 1");
    if (with_features && (min_frames == 0 || min_frames > max_frames)) {
      throw Error(ErrorKind::BadSpec, "bad frame range");
    }
    if (corrupt_events < 0 || corrupt_features < 0 || corrupt_events + corrupt_features > 1) {
      throw Error(ErrorKind::BadSpec, "corruption fractions must be >= 0 and sum to <= 1");
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
      for (std::size_t j = i + 1; j < classes.size(); ++j) {
        if (classes[i] == classes[j]) throw Error(ErrorKind::BadSpec, "duplicate class");
      }
    }
  }
};

/// Writes events/<id>.csv, features/<id>.txt and finally manifest.json under `out`.
/// Class c uses motion pattern c (mod 9) and a fixed random feature prototype.
inline SplitManifest write_synth_dataset(const SynthDatasetSpec& spec, std::uint64_t seed, const fs::path& out) {
  spec.validate();
  fs::create_directories(out / "events");
  if (spec.with_features) fs::create_directories(out / "features");

  enum : std::uint64_t { kSplitTag = 1, kCorruptTag, kProtoTag, kEventTag, kFeatureTag, kShapeTag };
  const std::size_t n = spec.per_class;
  const auto n_bad_events = static_cast<std::size_t>(std::llround(spec.corrupt_events * static_cast<double>(n)));
  const auto n_bad_features = static_cast<std::size_t>(std::llround(spec.corrupt_features * static_cast<double>(n)));

  SplitManifest manifest;
  manifest.root = out;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const auto gesture = spec.classes[c];
    auto split_rng = detail::dataset_rng(seed, c, 0, kSplitTag);
    const auto splits = detail::stratified_split(n, spec.test_per_class, split_rng);

    auto corrupt_rng = detail::dataset_rng(seed, c, 0, kCorruptTag);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), corrupt_rng);
    std::vector<int> corrupt(n, 0);  // 1 = events, 2 = features
    for (std::size_t i = 0; i < n_bad_events && i < n; ++i) corrupt[order[i]] = 1;
    for (std::size_t i = n_bad_events; i < n_bad_events + n_bad_features && i < n; ++i) corrupt[order[i]] = 2;

    std::vector<double> prototype(spec.feature_dim);
    {
      auto rng = detail::dataset_rng(seed, c, 0, kProtoTag);
      std::normal_distribution<double> g(0.0, 1.0);
      for (auto& v : prototype) v = g(rng);
    }

    for (std::size_t i = 0; i < n; ++i) {
      char buf[24];
      std::snprintf(buf, sizeof buf, "%03zu", i);
      ManifestEntry e;
      e.id = std::string(to_string(gesture)) + "_" + buf;
      e.gesture = gesture;
      e.split = splits[i];
      e.events = "events/" + e.id + ".csv";

      auto shape_rng = detail::dataset_rng(seed, c, i, kShapeTag);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      SynthSpec ss;
      ss.geometry = spec.geometry;
      ss.duration_us = spec.duration_us;
      ss.n_events = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(static_cast<double>(spec.n_events) * (0.8 + 0.4 * unit(shape_rng))));
      ss.pattern = corrupt[i] == 1 ? static_cast<int>(MotionPattern::noise) : static_cast<int>(c % 9);
      ss.positive_fraction = 0.4 + 0.2 * unit(shape_rng);
      ss.noise_fraction = spec.noise_fraction;
      ss.jitter = spec.jitter;
      write_events_file(synth_stream(ss, detail::dataset_rng(seed, c, i, kEventTag)()), out / e.events);

      if (spec.with_features) {
        auto rng = detail::dataset_rng(seed, c, i, kFeatureTag);
        std::uniform_int_distribution<std::size_t> len(spec.min_frames, spec.max_frames);
        std::normal_distribution<double> g(0.0, spec.feature_noise);
        const std::size_t frames = len(rng);
        // Corrupted samples get blank frames: no class signal and nothing
        // sample-specific to memorize either.
        const bool blank = corrupt[i] == 2;
        std::vector<double> values;
        values.reserve(frames * spec.feature_dim);
        for (std::size_t f = 0; f < frames; ++f) {
          const double envelope = std::sin(std::numbers::pi * (static_cast<double>(f) + 0.5) / static_cast<double>(frames));
          for (std::size_t d = 0; d < spec.feature_dim; ++d) {
            const double noise = g(rng);
            values.push_back(blank ? 0.0 : envelope * prototype[d] + noise);
          }
        }
        e.features = "features/" + e.id + ".txt";
        write_feature_file(FrameFeatureSequence(spec.feature_dim, std::move(values)), out / *e.features);
      }
      manifest.entries.push_back(std::move(e));
    }
  }
  detail::write_manifest_atomic(manifest, out / "manifest.json");
  return manifest;
}

// ---------------------------------------------------------------------------
// Dataset import
//
// Assumed layout (the released archive's native format is undocumented):
//   <root>/<gesture>/<sample>.csv        events, rows "t,x,y,p", optional header
//   <root>/<gesture>/<sample>.txt        optional frame features, one row per frame
// Gesture directory names match class names case-insensitively. Polarity may
// be 0/1 or -1/1. Everything else is reported and skipped.

struct ImportOptions {
  Geometry geometry = kDavis346;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct ImportReport {
  SplitManifest manifest;
  std::vector<std::string> warnings;
};

namespace detail {

inline EventStream parse_raw_events(const fs::path& path, Geometry geometry) {
  auto in = open_input(path);
  std::vector<Event> events;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cols = split(t, ',');
    std::vector<double> v;
    bool numeric = cols.size() == 4;
    for (auto c : cols) {
      const auto x = parse_number<double>(trim(c));
      if (!x) {
        numeric = false;
        break;
      }
      v.push_back(*x);
    }
    if (!numeric) {
      if (events.empty() && row == 1) continue;  // header
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(row) + ": expected t,x,y,p");
    }
    const auto p = static_cast<std::int64_t>(v[3]);
    events.push_back(make_event(static_cast<std::int64_t>(v[0]), static_cast<std::int64_t>(v[1]),
                                static_cast<std::int64_t>(v[2]), p < 0 ? 0 : p, geometry));
  }
  return validate_stream(std::move(events), geometry);
}

inline FrameFeatureSequence parse_raw_features(const fs::path& path) {
  auto in = open_input(path);
  std::string first;
  std::getline(in, first);
  if (trim(first).starts_with("D=")) {
    in.seekg(0);
    return parse_features(in, path.string());
  }
  std::vector<double> values;
  std::size_t dim = 0;
  std::string line = first;
  std::size_t row = 0;
  do {
    ++row;
    std::istringstream ss(line);
    std::string tok;
    std::size_t count = 0;
    while (ss >> tok) {
      const auto x = parse_number<double>(tok);
      if (!x) throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(row) + ": bad number");
      values.push_back(*x);
      ++count;
    }
    if (count == 0) continue;
    if (dim == 0) dim = count;
    if (count != dim) throw Error(ErrorKind::RaggedRows, path.string() + ":" + std::to_string(row));
  } while (std::getline(in, line));
  if (dim == 0) throw Error(ErrorKind::ParseError, path.string() + ": no frames");
  return FrameFeatureSequence(dim, std::move(values));
}

}  // namespace detail

inline ImportReport import_dataset(const fs::path& root, const fs::path& out, const ImportOptions& opt = {}) {
  if (!fs::is_directory(root)) throw Error(ErrorKind::MissingFile, "dataset root " + root.string());
  ImportReport report;
  std::map<GestureClass, std::vector<fs::path>> found;
  std::vector<fs::path> dirs;
  for (const auto& d : fs::directory_iterator(root)) {
    if (d.is_directory()) dirs.push_back(d.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& dir : dirs) {
    const auto g = parse_gesture(dir.filename().string());
    if (!g) {
      report.warnings.push_back("skipping directory " + dir.filename().string() + ": not a gesture name");
      continue;
    }
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.is_regular_file() && f.path().extension() == ".csv") found[*g].push_back(f.path());
    }
  }
  if (found.empty()) {
    throw Error(ErrorKind::UnknownLayout,
                "no <gesture>/<sample>.csv files under " + root.string() +
                    "; expected directories named after gesture classes (ok, hello, ..., other)");
  }

  fs::create_directories(out / "events");
  fs::create_directories(out / "features");
  report.manifest.root = out;
  for (auto& [gesture, files] : found) {
    std::sort(files.begin(), files.end());
    std::vector<ManifestEntry> entries;
    for (const auto& f : files) {
      ManifestEntry e;
      e.id = std::string(to_string(gesture)) + "_" + f.stem().string();
      e.gesture = gesture;
      e.events = "events/" + e.id + ".csv";
      try {
        const auto stream = detail::parse_raw_events(f, opt.geometry);
        auto feature_path = f;
        feature_path.replace_extension(".txt");
        std::optional<FrameFeatureSequence> features;
        if (fs::exists(feature_path)) features = detail::parse_raw_features(feature_path);
        write_events_file(stream, out / e.events);
        if (features) {
          e.features = "features/" + e.id + ".txt";
          write_feature_file(*features, out / *e.features);
        }
        entries.push_back(std::move(e));
      } catch (const Error& ex) {
        report.warnings.push_back(f.string() + ": " + ex.what());
      }
    }
    auto rng = detail::dataset_rng(opt.seed, static_cast<std::uint64_t>(gesture), 0, 7);
    const auto n_test = static_cast<std::size_t>(std::llround(opt.test_fraction * static_cast<double>(entries.size())));
    const auto splits = detail::stratified_split(entries.size(), n_test, rng);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      entries[i].split = splits[i];
      report.manifest.entries.push_back(std::move(entries[i]));
    }
  }
  if (report.manifest.entries.empty()) {
    throw Error(ErrorKind::UnknownLayout, "no importable samples under " + root.string());
  }
  detail::write_manifest_atomic(report.manifest, out / "manifest.json");
  return report;
}

}  // namespace gestemo

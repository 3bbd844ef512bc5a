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
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "gestemo/error.hpp"
#include "gestemo/event_core.hpp"
#include "gestemo/ingest.hpp"
#include "gestemo/parallel.hpp"

namespace gestemo {

/// Bin i counts values in [i * bin_width, (i + 1) * bin_width).
struct Histogram {
  std::size_t bin_width = 1;
  std::vector<std::size_t> counts;

  std::size_t total() const {
    std::size_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }
};

inline Histogram make_histogram(const std::vector<std::size_t>& values, std::size_t bin_width) {
  if (bin_width == 0) throw Error(ErrorKind::BadConfig, "bin width must be >= 1");
  Histogram h{bin_width, {}};
  for (auto v : values) {
    const std::size_t bin = v / bin_width;
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  return h;
}

/// Five-number summary with linear interpolation between order statistics
/// and 1.5 x IQR outliers.
struct BoxStats {
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::vector<double> outliers;
};

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  b.n = values.size();
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  const double iqr = b.q3 - b.q1;
  for (double v : values) {
    if (v < b.q1 - 1.5 * iqr || v > b.q3 + 1.5 * iqr) b.outliers.push_back(v);
  }
  return b;
}

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------
// Per-sample scan

struct SampleScan {
  const ManifestEntry* entry = nullptr;
  bool events_ok = false;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  Micros first_t = 0;
  Micros last_t = 0;
  std::optional<std::size_t> frames;
  std::vector<std::string> warnings;
};

inline SampleScan scan_sample(const SplitManifest& m, const ManifestEntry& e, bool want_events,
                              bool want_frames) {
  SampleScan s;
  s.entry = &e;
  if (want_events) {
    try {
      const auto stream = read_events_file(m.resolve(e.events));
      for (const auto& ev : stream) (ev.p ? s.positives : s.negatives)++;
      if (stream.empty()) {
        s.warnings.push_back(e.id + ": empty event stream skipped");
      } else {
        s.events_ok = true;
        s.first_t = stream.events().front().t;
        s.last_t = stream.events().back().t;
      }
    } catch (const Error& ex) {
      s.warnings.push_back(e.id + ": " + ex.what());
    }
  }
  if (want_frames && e.features) {
    try {
      s.frames = read_feature_file(m.resolve(*e.features)).frames();
    } catch (const Error& ex) {
      s.warnings.push_back(e.id + ": " + ex.what());
    }
  }
  return s;
}

inline std::vector<SampleScan> scan_manifest(const SplitManifest& m, bool want_events, bool want_frames,
                                             std::size_t threads = 1) {
  std::vector<SampleScan> scans(m.entries.size());
  parallel_for(m.entries.size(), threads,
               [&](std::size_t i) { scans[i] = scan_sample(m, m.entries[i], want_events, want_frames); });
  return scans;
}

// ---------------------------------------------------------------------------
// Dataset statistics

/// Samples per frame-count bin.
inline Histogram frame_length_histogram(const SplitManifest& m, std::size_t bin_width,
                                        std::size_t threads = 1) {
  for (const auto& e : m.entries) {
    if (!e.features) throw Error(ErrorKind::MissingFeatures, "sample " + e.id + " has no feature file");
  }
  const auto scans = scan_manifest(m, false, true, threads);
  std::vector<std::size_t> lengths;
  for (const auto& s : scans) {
    if (!s.frames) throw Error(ErrorKind::MissingFeatures, s.warnings.empty() ? s.entry->id : s.warnings.front());
    lengths.push_back(*s.frames);
  }
  return make_histogram(lengths, bin_width);
}

using GestureCounts = std::array<std::size_t, kGestureCount>;

inline GestureCounts class_counts(const SplitManifest& m) {
  GestureCounts counts{};
  for (const auto& e : m.entries) ++counts[static_cast<std::size_t>(e.gesture)];
  return counts;
}

using GestureSeconds = std::array<double, kGestureCount>;

/// Per class, the sum over samples of (t_last - t_first) in seconds.
/// Unreadable or empty streams are skipped and reported in `warnings`.
inline GestureSeconds event_time_sum(const SplitManifest& m, std::vector<std::string>* warnings = nullptr,
                                     std::size_t threads = 1) {
  GestureSeconds secs{};
  for (const auto& s : scan_manifest(m, true, false, threads)) {
    if (warnings) warnings->insert(warnings->end(), s.warnings.begin(), s.warnings.end());
    if (!s.events_ok) continue;
    secs[static_cast<std::size_t>(s.entry->gesture)] += static_cast<double>(s.last_t - s.first_t) / 1e6;
  }
  return secs;
}

struct ClassStats {
  GestureClass gesture = GestureClass::other;
  std::size_t samples = 0;
  double event_seconds = 0.0;
  BoxStats positive;
  BoxStats negative;
  std::optional<double> polarity_correlation;  // Pearson r of per-sample counts
};

inline std::vector<ClassStats> class_stats_from_scans(const std::vector<SampleScan>& scans) {
  std::array<std::vector<double>, kGestureCount> pos, neg;
  std::vector<ClassStats> out(kGestureCount);
  for (std::size_t g = 0; g < kGestureCount; ++g) out[g].gesture = kAllGestures[g];
  for (const auto& s : scans) {
    const auto g = static_cast<std::size_t>(s.entry->gesture);
    ++out[g].samples;
    if (!s.events_ok) continue;
    out[g].event_seconds += static_cast<double>(s.last_t - s.first_t) / 1e6;
    pos[g].push_back(static_cast<double>(s.positives));
    neg[g].push_back(static_cast<double>(s.negatives));
  }
  for (std::size_t g = 0; g < kGestureCount; ++g) {
    out[g].positive = box_stats(pos[g]);
    out[g].negative = box_stats(neg[g]);
    out[g].polarity_correlation = pearson(pos[g], neg[g]);
  }
  return out;
}

/// Per class and polarity, box statistics over per-sample event counts.
inline std::vector<ClassStats> polarity_box_stats(const SplitManifest& m, std::size_t threads = 1) {
  return class_stats_from_scans(scan_manifest(m, true, false, threads));
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json box_to_json(const BoxStats& b) {
  return {{"n", b.n}, {"min", b.min}, {"q1", b.q1}, {"median", b.median},
          {"q3", b.q3}, {"max", b.max}, {"outliers", b.outliers}};
}

struct DatasetStats {
  std::optional<Histogram> frames;  // absent when some sample has no features
  std::vector<ClassStats> classes;
  std::vector<std::string> warnings;
  std::size_t readable = 0;
};

inline DatasetStats compute_dataset_stats(const SplitManifest& m, std::size_t bin_width,
                                          std::size_t threads = 1) {
  DatasetStats d;
  const bool all_features =
      std::all_of(m.entries.begin(), m.entries.end(), [](const auto& e) { return e.features.has_value(); });
  const auto scans = scan_manifest(m, true, all_features, threads);
  std::vector<std::size_t> lengths;
  bool frames_ok = all_features;
  for (const auto& s : scans) {
    d.warnings.insert(d.warnings.end(), s.warnings.begin(), s.warnings.end());
    if (s.events_ok) ++d.readable;
    if (s.frames) lengths.push_back(*s.frames);
    else frames_ok = false;
  }
  if (!all_features) d.warnings.push_back("frame histogram skipped: some samples have no feature file");
  if (frames_ok) d.frames = make_histogram(lengths, bin_width);
  d.classes = class_stats_from_scans(scans);
  return d;
}

inline nlohmann::json stats_to_json(const DatasetStats& d) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : d.classes) {
    classes.push_back({{"gesture", std::string(to_string(c.gesture))},
                       {"samples", c.samples},
                       {"event_seconds", c.event_seconds},
                       {"positive", box_to_json(c.positive)},
                       {"negative", box_to_json(c.negative)},
                       {"polarity_correlation",
                        c.polarity_correlation ? nlohmann::json(*c.polarity_correlation) : nlohmann::json(nullptr)}});
  }
  nlohmann::json j{{"classes", classes}, {"warnings", d.warnings}};
  if (d.frames) {
    j["frame_histogram"] = {{"bin_width", d.frames->bin_width}, {"counts", d.frames->counts}};
  } else {
    j["frame_histogram"] = nullptr;
  }
  return j;
}

}  // namespace gestemo

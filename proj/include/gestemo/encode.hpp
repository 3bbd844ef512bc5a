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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gestemo/error.hpp"
#include "gestemo/event_core.hpp"
#include "gestemo/ingest.hpp"

namespace gestemo {

inline constexpr std::size_t kDefaultPlanes = 12;

/// K x 2 x H x W event counts; channel 0 holds negative events, 1 positive.
class DenseSpikePlanes {
 public:
  DenseSpikePlanes() = default;
  DenseSpikePlanes(std::size_t k, Geometry geometry)
      : k_(k), geometry_(geometry), counts_(k * 2 * geometry.pixels(), 0) {}
  DenseSpikePlanes(std::size_t k, Geometry geometry, std::vector<std::uint32_t> counts)
      : k_(k), geometry_(geometry), counts_(std::move(counts)) {
    if (counts_.size() != k_ * 2 * geometry_.pixels()) {
      throw Error(ErrorKind::ShapeMismatch, "plane buffer size does not match K x 2 x H x W");
    }
  }

  std::size_t planes() const { return k_; }
  const Geometry& geometry() const { return geometry_; }
  std::size_t plane_size() const { return 2 * geometry_.pixels(); }

  std::size_t index(std::size_t k, std::size_t p, std::size_t y, std::size_t x) const {
    return ((k * 2 + p) * geometry_.height + y) * geometry_.width + x;
  }
  std::uint32_t at(std::size_t k, std::size_t p, std::size_t y, std::size_t x) const {
    return counts_[index(k, p, y, x)];
  }
  std::uint32_t& at(std::size_t k, std::size_t p, std::size_t y, std::size_t x) {
    return counts_[index(k, p, y, x)];
  }

  std::span<const std::uint32_t> counts() const { return counts_; }
  std::span<const std::uint32_t> plane(std::size_t k) const {
    return std::span<const std::uint32_t>(counts_).subspan(k * plane_size(), plane_size());
  }

  std::uint64_t plane_total(std::size_t k) const {
    const auto p = plane(k);
    return std::accumulate(p.begin(), p.end(), std::uint64_t{0});
  }
  std::uint64_t total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
  }

  bool operator==(const DenseSpikePlanes&) const = default;

 private:
  std::size_t k_ = 0;
  Geometry geometry_{};
  std::vector<std::uint32_t> counts_;
};

/// Sizes of the K contiguous event groups: the first (L mod K) groups hold
/// one extra event.
inline std::vector<std::size_t> group_sizes(std::size_t events, std::size_t k) {
  std::vector<std::size_t> sizes(k, events / k);
  for (std::size_t i = 0; i < events % k; ++i) ++sizes[i];
  return sizes;
}

/// Compresses a stream into K planes by fixed event count.
inline DenseSpikePlanes dense_spike_planes(const EventStream& stream,
                                           std::size_t k = kDefaultPlanes) {
  if (k < 1) throw Error(ErrorKind::BadK, "K must be >= 1");
  if (stream.empty()) throw Error(ErrorKind::EmptyStream, "cannot encode an empty stream");
  DenseSpikePlanes planes(k, stream.geometry());
  const auto sizes = group_sizes(stream.size(), k);
  std::size_t i = 0;
  for (std::size_t g = 0; g < k; ++g) {
    for (std::size_t n = 0; n < sizes[g]; ++n, ++i) {
      const Event& e = stream[i];
      ++planes.at(g, e.p, e.y, e.x);
    }
  }
  return planes;
}

/// Block-sum pooling by `factor`, zero-padding H and W up to a multiple.
inline DenseSpikePlanes downsample_planes(const DenseSpikePlanes& planes, std::size_t factor) {
  if (factor < 1) throw Error(ErrorKind::BadFactor, "factor must be >= 1");
  if (factor == 1) return planes;
  const Geometry in = planes.geometry();
  const Geometry out{static_cast<std::uint32_t>((in.width + factor - 1) / factor),
                     static_cast<std::uint32_t>((in.height + factor - 1) / factor)};
  DenseSpikePlanes result(planes.planes(), out);
  for (std::size_t k = 0; k < planes.planes(); ++k) {
    for (std::size_t p = 0; p < 2; ++p) {
      for (std::size_t y = 0; y < in.height; ++y) {
        for (std::size_t x = 0; x < in.width; ++x) {
          result.at(k, p, y / factor, x / factor) += planes.at(k, p, y, x);
        }
      }
    }
  }
  return result;
}

enum class ScaleMode { none, clip01, divide_by_max };

inline std::string_view to_string(ScaleMode m) {
  switch (m) {
    case ScaleMode::none: return "none";
    case ScaleMode::clip01: return "clip01";
    case ScaleMode::divide_by_max: return "divide_by_max";
  }
  return "?";
}

inline std::optional<ScaleMode> parse_scale_mode(std::string_view s) {
  if (s == "none") return ScaleMode::none;
  if (s == "clip01") return ScaleMode::clip01;
  if (s == "divide_by_max") return ScaleMode::divide_by_max;
  return std::nullopt;
}

/// Real-valued planes in the same K x 2 x H x W layout, ready for the SNN.
struct RealPlanes {
  std::size_t k = 0;
  Geometry geometry{};
  std::vector<double> values;

  std::size_t plane_size() const { return 2 * geometry.pixels(); }
  std::span<const double> plane(std::size_t i) const {
    return std::span<const double>(values).subspan(i * plane_size(), plane_size());
  }
};

inline RealPlanes scale_planes(const DenseSpikePlanes& planes, ScaleMode mode = ScaleMode::clip01) {
  RealPlanes out{planes.planes(), planes.geometry(), {}};
  const auto counts = planes.counts();
  out.values.resize(counts.size());
  switch (mode) {
    case ScaleMode::none:
      std::transform(counts.begin(), counts.end(), out.values.begin(),
                     [](std::uint32_t c) { return static_cast<double>(c); });
      break;
    case ScaleMode::clip01:
      std::transform(counts.begin(), counts.end(), out.values.begin(),
                     [](std::uint32_t c) { return c > 0 ? 1.0 : 0.0; });
      break;
    case ScaleMode::divide_by_max: {
      const std::uint32_t max = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
      std::transform(counts.begin(), counts.end(), out.values.begin(), [max](std::uint32_t c) {
        return max == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(max);
      });
      break;
    }
  }
  return out;
}

// Planes file: "K,W,H" header, then one line per plane holding its 2*H*W
// counts in row-major (p, y, x) order, comma-separated.

inline void write_planes(std::ostream& out, const DenseSpikePlanes& planes) {
  out << planes.planes() << ',' << planes.geometry().width << ',' << planes.geometry().height
      << '\n';
  for (std::size_t k = 0; k < planes.planes(); ++k) {
    const auto p = planes.plane(k);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i) out << ',';
      out << p[i];
    }
    out << '\n';
  }
}

inline void write_planes_file(const DenseSpikePlanes& planes, const fs::path& path) {
  auto out = detail::open_output(path);
  write_planes(out, planes);
  if (!out.flush()) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

inline DenseSpikePlanes read_planes_file(const fs::path& path) {
  auto in = detail::open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "planes: missing header", 1);
  const auto head = detail::split(detail::trim(line), ',');
  if (head.size() != 3) throw Error(ErrorKind::ParseError, "planes: header must be K,W,H", 1);
  const auto k = detail::parse_number<std::size_t>(head[0]);
  const auto w = detail::parse_number<std::uint32_t>(head[1]);
  const auto h = detail::parse_number<std::uint32_t>(head[2]);
  if (!k || !w || !h) throw Error(ErrorKind::ParseError, "planes: bad header", 1);
  const Geometry g{*w, *h};
  std::vector<std::uint32_t> counts;
  counts.reserve(*k * 2 * g.pixels());
  std::size_t line_no = 1;
  for (std::size_t plane = 0; plane < *k; ++plane) {
    ++line_no;
    if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "planes: truncated", line_no);
    const auto fields = detail::split(detail::trim(line), ',');
    if (fields.size() != 2 * g.pixels()) {
      throw Error(ErrorKind::RaggedRows, "planes: wrong value count", line_no);
    }
    for (auto f : fields) {
      auto v = detail::parse_number<std::uint32_t>(f);
      if (!v) throw Error(ErrorKind::ParseError, "planes: bad count", line_no);
      counts.push_back(*v);
    }
  }
  return DenseSpikePlanes(*k, g, std::move(counts));
}

}  // namespace gestemo

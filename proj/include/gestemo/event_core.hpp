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
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gestemo/error.hpp"

namespace gestemo {

/// Integer microseconds; event sensors stamp at 1 us resolution.
using Micros = std::uint64_t;

struct Geometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  bool contains(std::uint64_t x, std::uint64_t y) const {
    return x < width && y < height;
  }
  std::size_t pixels() const { return std::size_t{width} * height; }
  bool operator==(const Geometry&) const = default;
};

inline constexpr Geometry kDavis346{346, 260};

struct Event {
  Micros t = 0;
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint8_t p = 0;  // 1 = positive, 0 = negative

  bool operator==(const Event&) const = default;
};

inline Event make_event(std::int64_t t, std::int64_t x, std::int64_t y,
                        std::int64_t p, Geometry geometry) {
  if (t < 0) throw Error(ErrorKind::OutOfBounds, "negative timestamp");
  if (x < 0 || y < 0 ||
      !geometry.contains(static_cast<std::uint64_t>(x),
                         static_cast<std::uint64_t>(y))) {
    throw Error(ErrorKind::OutOfBounds,
                "pixel (" + std::to_string(x) + "," + std::to_string(y) +
                    ") outside " + std::to_string(geometry.width) + "x" +
                    std::to_string(geometry.height));
  }
  if (p != 0 && p != 1) {
    throw Error(ErrorKind::BadPolarity, "polarity " + std::to_string(p));
  }
  return Event{static_cast<Micros>(t), static_cast<std::uint32_t>(x),
               static_cast<std::uint32_t>(y), static_cast<std::uint8_t>(p)};
}

/// Time-ordered, bounds-checked event sequence. Only constructible through
/// validate_stream (or default-constructed empty), so every instance holds
/// its invariants.
class EventStream {
 public:
  EventStream() = default;
  explicit EventStream(Geometry geometry) : geometry_(geometry) {}

  const Geometry& geometry() const { return geometry_; }
  std::span<const Event> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }

  std::vector<Micros> times() const {
    std::vector<Micros> out;
    out.reserve(events_.size());
    for (const auto& e : events_) out.push_back(e.t);
    return out;
  }

  /// Contiguous sub-stream [first, last).
  EventStream slice(std::size_t first, std::size_t last) const {
    EventStream s(geometry_);
    s.events_.assign(events_.begin() + static_cast<std::ptrdiff_t>(first),
                     events_.begin() + static_cast<std::ptrdiff_t>(last));
    return s;
  }

  bool operator==(const EventStream&) const = default;

  friend EventStream validate_stream(std::vector<Event> events,
                                     Geometry geometry);

 private:
  Geometry geometry_{};
  std::vector<Event> events_;
};

inline EventStream validate_stream(std::vector<Event> events,
                                   Geometry geometry) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!geometry.contains(e.x, e.y)) {
      throw Error(ErrorKind::OutOfBounds, "event outside sensor geometry", i);
    }
    if (e.p > 1) throw Error(ErrorKind::BadPolarity, "polarity not in {0,1}", i);
    if (i > 0 && e.t < events[i - 1].t) {
      throw Error(ErrorKind::NonMonotonicTime,
                  "timestamp decreases at index " + std::to_string(i), i);
    }
  }
  EventStream s(geometry);
  s.events_ = std::move(events);
  return s;
}

// ---------------------------------------------------------------------------
// Label taxonomy

enum class GestureClass : std::uint8_t {
  ok,
  hello,
  no,
  kill,
  victory,
  good,
  yes,
  love,
  fighting,
  other,
};

enum class EmotionClass : std::uint8_t { Neutral, Negative, Positive };

inline constexpr std::size_t kGestureCount = 10;
inline constexpr std::size_t kEmotionCount = 3;

inline constexpr std::array<GestureClass, kGestureCount> kAllGestures = {
    GestureClass::ok,      GestureClass::hello, GestureClass::no,
    GestureClass::kill,    GestureClass::victory, GestureClass::good,
    GestureClass::yes,     GestureClass::love,  GestureClass::fighting,
    GestureClass::other};

inline constexpr std::array<EmotionClass, kEmotionCount> kAllEmotions = {
    EmotionClass::Neutral, EmotionClass::Negative, EmotionClass::Positive};

inline std::string_view to_string(GestureClass g) {
  switch (g) {
    case GestureClass::ok: return "ok";
    case GestureClass::hello: return "hello";
    case GestureClass::no: return "no";
    case GestureClass::kill: return "kill";
    case GestureClass::victory: return "victory";
    case GestureClass::good: return "good";
    case GestureClass::yes: return "yes";
    case GestureClass::love: return "love";
    case GestureClass::fighting: return "fighting";
    case GestureClass::other: return "other";
  }
  return "?";
}

inline std::string_view to_string(EmotionClass e) {
  switch (e) {
    case EmotionClass::Neutral: return "Neutral";
    case EmotionClass::Negative: return "Negative";
    case EmotionClass::Positive: return "Positive";
  }
  return "?";
}

inline std::optional<GestureClass> parse_gesture(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (GestureClass g : kAllGestures) {
    if (lower == to_string(g)) return g;
  }
  return std::nullopt;
}

/// Affective disposition of a gesture; `other` carries none.
inline std::optional<EmotionClass> emotion_of(GestureClass g) {
  switch (g) {
    case GestureClass::ok:
    case GestureClass::hello:
      return EmotionClass::Neutral;
    case GestureClass::no:
    case GestureClass::kill:
      return EmotionClass::Negative;
    case GestureClass::victory:
    case GestureClass::good:
    case GestureClass::yes:
    case GestureClass::love:
    case GestureClass::fighting:
      return EmotionClass::Positive;
    case GestureClass::other:
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Synthetic event streams

/// Spatial trajectories for the generator. Ids 0..8 are distinct motions;
/// id 9 is structureless background noise.
enum class MotionPattern : int {
  horizontal_sweep = 0,
  vertical_sweep = 1,
  circle = 2,
  diagonal = 3,
  anti_diagonal = 4,
  reverse_horizontal = 5,
  reverse_vertical = 6,
  figure_eight = 7,
  shake = 8,
  noise = 9,
};

inline constexpr int kPatternCount = 10;

struct SynthSpec {
  Geometry geometry{32, 32};
  std::int64_t duration_us = 1'000'000;
  std::int64_t n_events = 1000;
  int pattern = 0;
  double positive_fraction = 0.5;
  /// Fraction of events scattered uniformly over the sensor.
  double noise_fraction = 0.05;
  /// Gaussian spread around the trajectory, as a fraction of min(W, H).
  double jitter = 0.05;
};

namespace detail {

inline std::pair<double, double> trajectory(MotionPattern pattern, double u) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  switch (pattern) {
    case MotionPattern::horizontal_sweep: return {0.1 + 0.8 * u, 0.5};
    case MotionPattern::vertical_sweep: return {0.5, 0.1 + 0.8 * u};
    case MotionPattern::circle:
      return {0.5 + 0.3 * std::cos(two_pi * u), 0.5 + 0.3 * std::sin(two_pi * u)};
    case MotionPattern::diagonal: return {0.1 + 0.8 * u, 0.1 + 0.8 * u};
    case MotionPattern::anti_diagonal: return {0.9 - 0.8 * u, 0.1 + 0.8 * u};
    case MotionPattern::reverse_horizontal: return {0.9 - 0.8 * u, 0.3};
    case MotionPattern::reverse_vertical: return {0.3, 0.9 - 0.8 * u};
    case MotionPattern::figure_eight:
      return {0.5 + 0.3 * std::sin(two_pi * u), 0.5 + 0.3 * std::sin(2 * two_pi * u)};
    case MotionPattern::shake: return {0.5 + 0.3 * std::sin(3 * two_pi * u), 0.7};
    case MotionPattern::noise: return {0.5, 0.5};
  }
  return {0.5, 0.5};
}

}  // namespace detail

/// Deterministic event stream for a motion pattern: a blob following the
/// pattern's trajectory over [0, duration_us], plus uniform background noise.
inline EventStream synth_stream(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.duration_us < 0) throw Error(ErrorKind::BadSpec, "negative duration");
  if (spec.n_events < 0) throw Error(ErrorKind::BadSpec, "negative event count");
  if (!(spec.positive_fraction >= 0.0 && spec.positive_fraction <= 1.0)) {
    throw Error(ErrorKind::BadSpec, "positive_fraction outside [0,1]");
  }
  if (!(spec.noise_fraction >= 0.0 && spec.noise_fraction <= 1.0)) {
    throw Error(ErrorKind::BadSpec, "noise_fraction outside [0,1]");
  }
  if (spec.pattern < 0 || spec.pattern >= kPatternCount) {
    throw Error(ErrorKind::BadSpec, "unknown motion pattern " + std::to_string(spec.pattern));
  }
  if (spec.n_events > 0 && spec.geometry.pixels() == 0) {
    throw Error(ErrorKind::BadSpec, "empty sensor geometry");
  }

  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::size_t>(spec.n_events);
  std::vector<Micros> times(n);
  std::uniform_int_distribution<Micros> time_dist(0, static_cast<Micros>(spec.duration_us));
  for (auto& t : times) t = time_dist(rng);
  std::sort(times.begin(), times.end());

  const double w = spec.geometry.width;
  const double h = spec.geometry.height;
  const double sigma = spec.jitter * std::min(w, h);
  const auto pattern = static_cast<MotionPattern>(spec.pattern);
  const bool all_noise = pattern == MotionPattern::noise;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution positive(spec.positive_fraction);
  std::bernoulli_distribution background(spec.noise_fraction);

  auto clamp_px = [](double v, std::uint32_t extent) {
    const double c = std::clamp(std::floor(v), 0.0, static_cast<double>(extent - 1));
    return static_cast<std::uint32_t>(c);
  };

  std::vector<Event> events;
  events.reserve(n);
  for (Micros t : times) {
    const double u = spec.duration_us > 0
                         ? static_cast<double>(t) / static_cast<double>(spec.duration_us)
                         : 0.0;
    double px = 0.0;
    double py = 0.0;
    if (all_noise || background(rng)) {
      px = unit(rng) * w;
      py = unit(rng) * h;
    } else {
      const auto [cx, cy] = detail::trajectory(pattern, u);
      px = cx * w + sigma * gauss(rng);
      py = cy * h + sigma * gauss(rng);
    }
    events.push_back(Event{t, clamp_px(px, spec.geometry.width),
                           clamp_px(py, spec.geometry.height),
                           static_cast<std::uint8_t>(positive(rng) ? 1 : 0)});
  }
  return validate_stream(std::move(events), spec.geometry);
}

}  // namespace gestemo

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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gestemo/error.hpp"
#include "gestemo/event_core.hpp"

namespace gestemo {

/// Instrumentation for the alignment search: every probe of an element
/// against the tag (and each boundary clamp test) counts as one comparison.
struct SearchCounter {
  std::size_t comparisons = 0;
};

namespace detail {

inline Micros abs_diff(Micros a, Micros b) { return a > b ? a - b : b - a; }

}  // namespace detail

/// One binary descent over times[lo..hi] with fixed tolerance alpha.
///
/// The descent keeps a bracket: after probing mid it continues on [lo, mid]
/// when times[mid] > tag and on [mid, hi] otherwise. It stops once the
/// bracket holds two or fewer elements, since its midpoint would then be an
/// index already probed. Returns the first probed index within alpha of the
/// tag, or nullopt.
inline std::optional<std::size_t> scaling_binary_search(std::span<const Micros> times,
                                                        std::size_t lo, std::size_t hi,
                                                        Micros tag, Micros alpha,
                                                        SearchCounter* counter = nullptr) {
  if (lo > hi || hi >= times.size()) {
    throw Error(ErrorKind::BadRange, "search range outside time list");
  }
  if (alpha < 1) throw Error(ErrorKind::BadRange, "alpha must be >= 1");
  while (true) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (counter) ++counter->comparisons;
    if (detail::abs_diff(times[mid], tag) < alpha) return mid;
    if (times[mid] > tag) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= 1) return std::nullopt;
  }
}

struct Position {
  std::size_t index = 0;
  Micros alpha = 0;  // tolerance at success; 0 when a clamp decided
};

/// Locates the event index for an annotation timestamp: clamps outside the
/// recorded span, otherwise retries the descent with alpha = 1, 2, 3, ...
inline Position find_position_traced(Micros tag, std::span<const Micros> times,
                                     SearchCounter* counter = nullptr) {
  if (times.empty()) throw Error(ErrorKind::EmptyTimeList, "no event timestamps");
  const std::size_t last = times.size() - 1;
  if (counter) ++counter->comparisons;
  if (tag < times.front()) return {0, 0};
  if (counter) ++counter->comparisons;
  if (tag > times.back()) return {last, 0};
  // times[0] <= tag <= times[last]; the descent path is the same for every
  // alpha, so this terminates once alpha exceeds the closest probed distance.
  for (Micros alpha = 1;; ++alpha) {
    if (auto hit = scaling_binary_search(times, 0, last, tag, alpha, counter)) {
      return {*hit, alpha};
    }
  }
}

inline std::size_t find_position(Micros tag, std::span<const Micros> times) {
  return find_position_traced(tag, times).index;
}

inline std::vector<std::size_t> split_indices(std::span<const Micros> tags,
                                              std::span<const Micros> times) {
  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (tags[i] <= tags[i - 1]) {
      throw Error(ErrorKind::UnsortedTags, "tags must be strictly increasing", i);
    }
  }
  std::vector<std::size_t> out;
  out.reserve(tags.size());
  if (tags.empty()) return out;
  if (times.empty()) throw Error(ErrorKind::EmptyTimeList, "no event timestamps");
  for (Micros tag : tags) out.push_back(find_position(tag, times));
  return out;
}

/// Cuts a stream into cuts.size() + 1 contiguous segments; segment k spans
/// event indices [cuts[k-1], cuts[k]) with implicit 0 and L at the ends.
inline std::vector<EventStream> segment_events(const EventStream& stream,
                                               std::span<const std::size_t> cuts) {
  const std::size_t n = stream.size();
  std::size_t prev = 0;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (cuts[i] > n || cuts[i] < prev) {
      throw Error(ErrorKind::BadCuts, "cut indices must be non-decreasing and <= L", i);
    }
    prev = cuts[i];
  }
  std::vector<EventStream> segments;
  segments.reserve(cuts.size() + 1);
  std::size_t begin = 0;
  for (std::size_t c : cuts) {
    segments.push_back(stream.slice(begin, c));
    begin = c;
  }
  segments.push_back(stream.slice(begin, n));
  return segments;
}

}  // namespace gestemo

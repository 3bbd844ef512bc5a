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

#include <map>

#include <gtest/gtest.h>

#include "gestemo/event_core.hpp"
#include "test_util.hpp"

namespace gestemo {
namespace {

using testing::error_kind;

TEST(MakeEvent, AcceptsSensorCorner) {
  const Event e = make_event(0, 0, 0, 1, kDavis346);
  EXPECT_EQ(e.t, 0u);
  EXPECT_EQ(e.p, 1);
  EXPECT_EQ(kDavis346.width, 346u);
  EXPECT_EQ(kDavis346.height, 260u);
}

TEST(MakeEvent, RejectsColumnEqualToWidth) {
  EXPECT_EQ(error_kind([] { make_event(5, 346, 10, 0, kDavis346); }), ErrorKind::OutOfBounds);
  EXPECT_EQ(error_kind([] { make_event(5, 10, 260, 0, kDavis346); }), ErrorKind::OutOfBounds);
  EXPECT_NO_THROW(make_event(5, 345, 259, 0, kDavis346));
}

TEST(MakeEvent, RejectsPolarityOutsideDomain) {
  EXPECT_EQ(error_kind([] { make_event(5, 10, 10, 2, kDavis346); }), ErrorKind::BadPolarity);
  EXPECT_EQ(error_kind([] { make_event(5, 10, 10, -1, kDavis346); }), ErrorKind::BadPolarity);
}

TEST(MakeEvent, RejectsNegativeTime) {
  EXPECT_EQ(error_kind([] { make_event(-1, 0, 0, 0, kDavis346); }), ErrorKind::OutOfBounds);
}

TEST(ValidateStream, EmptyIsValid) {
  const auto s = validate_stream({}, kDavis346);
  EXPECT_TRUE(s.empty());
}

TEST(ValidateStream, TiesAllowed) {
  const Geometry g{4, 4};
  const auto s = validate_stream({{10, 0, 0, 1}, {20, 1, 1, 0}, {20, 2, 2, 1}}, g);
  EXPECT_EQ(s.size(), 3u);
}

TEST(ValidateStream, DecreasingTimeReportsIndex) {
  const Geometry g{4, 4};
  try {
    validate_stream({{10, 0, 0, 1}, {5, 0, 0, 1}}, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonMonotonicTime);
    ASSERT_TRUE(e.index().has_value());
    EXPECT_EQ(*e.index(), 1u);
  }
}

TEST(ValidateStream, ChecksBoundsAndPolarity) {
  const Geometry g{4, 4};
  EXPECT_EQ(error_kind([&] { validate_stream({{1, 4, 0, 1}}, g); }), ErrorKind::OutOfBounds);
  EXPECT_EQ(error_kind([&] { validate_stream({{1, 0, 0, 3}}, g); }), ErrorKind::BadPolarity);
}

TEST(ValidateStream, Idempotent) {
  const auto s = synth_stream({}, 3);
  const auto again = validate_stream({s.events().begin(), s.events().end()}, s.geometry());
  EXPECT_EQ(s, again);
}

TEST(Labels, EmotionMapping) {
  EXPECT_EQ(emotion_of(GestureClass::ok), EmotionClass::Neutral);
  EXPECT_EQ(emotion_of(GestureClass::kill), EmotionClass::Negative);
  EXPECT_EQ(emotion_of(GestureClass::fighting), EmotionClass::Positive);
  EXPECT_FALSE(emotion_of(GestureClass::other).has_value());
}

TEST(Labels, EmotionTotalOnNamedGestures) {
  std::map<EmotionClass, int> per;
  for (GestureClass g : kAllGestures) {
    if (g == GestureClass::other) continue;
    const auto e = emotion_of(g);
    ASSERT_TRUE(e.has_value()) << to_string(g);
    ++per[*e];
  }
  EXPECT_EQ(per[EmotionClass::Neutral], 2);   // ok, hello
  EXPECT_EQ(per[EmotionClass::Negative], 2);  // no, kill
  EXPECT_EQ(per[EmotionClass::Positive], 5);
}

TEST(Labels, ParseGestureRoundTrip) {
  for (GestureClass g : kAllGestures) EXPECT_EQ(parse_gesture(to_string(g)), g);
  EXPECT_EQ(parse_gesture("Victory"), GestureClass::victory);
  EXPECT_FALSE(parse_gesture("wave").has_value());
}

TEST(SynthStream, ZeroEventsGivesEmptyStream) {
  SynthSpec spec;
  spec.n_events = 0;
  EXPECT_TRUE(synth_stream(spec, 1).empty());
}

TEST(SynthStream, SameSeedSameStream) {
  SynthSpec spec;
  spec.n_events = 1000;
  spec.positive_fraction = 0.5;
  EXPECT_EQ(synth_stream(spec, 7), synth_stream(spec, 7));
}

std::vector<std::size_t> pixel_histogram(const EventStream& s) {
  std::vector<std::size_t> h(s.geometry().pixels(), 0);
  for (const auto& e : s) ++h[e.y * s.geometry().width + e.x];
  return h;
}

TEST(SynthStream, PatternsDifferInPixelHistogram) {
  SynthSpec a;
  a.pattern = 0;
  SynthSpec b = a;
  b.pattern = 1;
  EXPECT_NE(pixel_histogram(synth_stream(a, 11)), pixel_histogram(synth_stream(b, 11)));
}

TEST(SynthStream, OutputAlwaysValidates) {
  for (int pattern = 0; pattern < kPatternCount; ++pattern) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SynthSpec spec;
      spec.pattern = pattern;
      spec.geometry = {17, 9};
      spec.n_events = 300;
      spec.jitter = 0.3;
      const auto s = synth_stream(spec, seed);
      EXPECT_EQ(s.size(), 300u);
      EXPECT_NO_THROW(validate_stream({s.events().begin(), s.events().end()}, s.geometry()));
    }
  }
}

TEST(SynthStream, RejectsBadSpec) {
  SynthSpec spec;
  spec.pattern = kPatternCount;
  EXPECT_EQ(error_kind([&] { synth_stream(spec, 0); }), ErrorKind::BadSpec);
  spec = {};
  spec.positive_fraction = 1.5;
  EXPECT_EQ(error_kind([&] { synth_stream(spec, 0); }), ErrorKind::BadSpec);
}

TEST(SynthStream, PositiveFractionExtremes) {
  SynthSpec spec;
  spec.positive_fraction = 1.0;
  for (const auto& e : synth_stream(spec, 2)) EXPECT_EQ(e.p, 1);
  spec.positive_fraction = 0.0;
  for (const auto& e : synth_stream(spec, 2)) EXPECT_EQ(e.p, 0);
}

}  // namespace
}  // namespace gestemo

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
#include <set>
#include <string>
#include <string_view>

#include "json.hpp"

#include "gestemo/encode.hpp"
#include "gestemo/error.hpp"
#include "gestemo/optim.hpp"
#include "gestemo/snn.hpp"

namespace gestemo {

enum class BranchMode { snn_only, video_only, fused };
enum class TargetTask { emotion, gesture };

inline std::string_view to_string(BranchMode b) {
  switch (b) {
    case BranchMode::snn_only: return "snn_only";
    case BranchMode::video_only: return "video_only";
    case BranchMode::fused: return "fused";
  }
  return "?";
}

inline std::optional<BranchMode> parse_branch(std::string_view s) {
  if (s == "snn_only" || s == "snn") return BranchMode::snn_only;
  if (s == "video_only" || s == "video") return BranchMode::video_only;
  if (s == "fused") return BranchMode::fused;
  return std::nullopt;
}

inline std::string_view to_string(TargetTask t) { return t == TargetTask::emotion ? "emotion" : "gesture"; }

inline std::optional<TargetTask> parse_task(std::string_view s) {
  if (s == "emotion") return TargetTask::emotion;
  if (s == "gesture") return TargetTask::gesture;
  return std::nullopt;
}

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  AdamHyper adam{};
  std::uint64_t seed = 0;
  double lambda = 1.0;
  std::size_t k = kDefaultPlanes;
  BranchMode branch = BranchMode::fused;
  bool separate = false;  // train branches on their own losses, fuse only at evaluation
  TargetTask task = TargetTask::emotion;
  bool include_other = false;
  std::size_t downsample = 1;
  ScaleMode scale = ScaleMode::clip01;
  std::size_t max_frames = 100;
  bool pad_frames = true;
  LifConfig lif{};
  double surrogate_width = 0.5;
  bool detach_reset = true;
  SnnWidths snn_widths{};
  PoolMode pool = PoolMode::sum;
  std::size_t hidden = 128;
  std::size_t head_hidden = 64;
  // SNN weight init scale. At 1 (plain Glorot) sparse spike planes barely
  // reach threshold past the first conv layer and the output never fires.
  double init_gain = 3.0;
  std::size_t threads = 1;

  bool uses_snn() const { return branch != BranchMode::video_only; }
  bool uses_video() const { return branch != BranchMode::snn_only; }

  void validate() const {
    auto bad = [](const std::string& m) { return Error(ErrorKind::BadConfig, m); };
    if (batch_size == 0) throw bad("batch_size must be >= 1");
    if (!(adam.learning_rate > 0.0)) throw bad("learning_rate must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw bad("Adam betas must be in [0,1)");
    }
    if (!(adam.epsilon > 0.0)) throw bad("epsilon must be > 0");
    if (!(lambda >= 0.0)) throw bad("lambda must be >= 0");
    if (k == 0) throw Error(ErrorKind::BadK, "K must be >= 1");
    if (downsample == 0) throw Error(ErrorKind::BadFactor, "downsample factor must be >= 1");
    if (!(surrogate_width > 0.0)) throw bad("surrogate_width must be > 0");
    if (hidden == 0 || head_hidden == 0) throw bad("hidden sizes must be >= 1");
    if (snn_widths.conv1 == 0 || snn_widths.conv2 == 0 || snn_widths.hidden == 0) {
      throw bad("SNN widths must be >= 1");
    }
    if (!(init_gain > 0.0)) throw bad("init_gain must be > 0");
    if (threads == 0) throw bad("threads must be >= 1");
    if (include_other && task == TargetTask::emotion) {
      throw bad("include_other needs the gesture task; 'other' has no emotion");
    }
    lif.validate();
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return nlohmann::json{
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"learning_rate", c.adam.learning_rate},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"epsilon", c.adam.epsilon},
      {"seed", c.seed},
      {"lambda", c.lambda},
      {"k", c.k},
      {"branch", std::string(to_string(c.branch))},
      {"separate", c.separate},
      {"task", std::string(to_string(c.task))},
      {"include_other", c.include_other},
      {"downsample", c.downsample},
      {"scale_mode", std::string(to_string(c.scale))},
      {"max_frames", c.max_frames},
      {"pad_frames", c.pad_frames},
      {"lif_beta", c.lif.beta},
      {"lif_theta", c.lif.theta},
      {"lif_reset", std::string(to_string(c.lif.reset))},
      {"surrogate_width", c.surrogate_width},
      {"detach_reset", c.detach_reset},
      {"conv1_channels", c.snn_widths.conv1},
      {"conv2_channels", c.snn_widths.conv2},
      {"fc_hidden", c.snn_widths.hidden},
      {"pool", c.pool == PoolMode::sum ? "sum" : "max"},
      {"hidden", c.hidden},
      {"head_hidden", c.head_hidden},
      {"init_gain", c.init_gain},
      {"threads", c.threads},
  };
}

inline bool operator==(const TrainConfig& a, const TrainConfig& b) { return to_json(a) == to_json(b); }

/// Overlays the keys present in `j` onto `c`. Unknown keys are rejected.
inline void apply_json(TrainConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::BadConfig, "config must be a JSON object");
  static const std::set<std::string> known = [] {
    std::set<std::string> s;
    const auto defaults = to_json(TrainConfig{});
    for (const auto& [key, _] : defaults.items()) s.insert(key);
    return s;
  }();
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.contains(key)) throw Error(ErrorKind::BadConfig, "unknown config key '" + key + "'");
      if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "learning_rate") c.adam.learning_rate = value.get<double>();
      else if (key == "beta1") c.adam.beta1 = value.get<double>();
      else if (key == "beta2") c.adam.beta2 = value.get<double>();
      else if (key == "epsilon") c.adam.epsilon = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "lambda") c.lambda = value.get<double>();
      else if (key == "k") c.k = value.get<std::size_t>();
      else if (key == "branch") {
        auto b = parse_branch(value.get<std::string>());
        if (!b) throw Error(ErrorKind::BadConfig, "unknown branch mode");
        c.branch = *b;
      } else if (key == "separate") c.separate = value.get<bool>();
      else if (key == "task") {
        auto t = parse_task(value.get<std::string>());
        if (!t) throw Error(ErrorKind::BadConfig, "unknown task");
        c.task = *t;
      } else if (key == "include_other") c.include_other = value.get<bool>();
      else if (key == "downsample") c.downsample = value.get<std::size_t>();
      else if (key == "scale_mode") {
        auto m = parse_scale_mode(value.get<std::string>());
        if (!m) throw Error(ErrorKind::BadConfig, "unknown scale mode");
        c.scale = *m;
      } else if (key == "max_frames") c.max_frames = value.get<std::size_t>();
      else if (key == "pad_frames") c.pad_frames = value.get<bool>();
      else if (key == "lif_beta") c.lif.beta = value.get<double>();
      else if (key == "lif_theta") c.lif.theta = value.get<double>();
      else if (key == "lif_reset") {
        const auto r = value.get<std::string>();
        if (r == "to_zero") c.lif.reset = ResetMode::to_zero;
        else if (r == "subtract_theta") c.lif.reset = ResetMode::subtract_theta;
        else throw Error(ErrorKind::BadConfig, "unknown reset mode '" + r + "'");
      } else if (key == "surrogate_width") c.surrogate_width = value.get<double>();
      else if (key == "detach_reset") c.detach_reset = value.get<bool>();
      else if (key == "conv1_channels") c.snn_widths.conv1 = value.get<std::size_t>();
      else if (key == "conv2_channels") c.snn_widths.conv2 = value.get<std::size_t>();
      else if (key == "fc_hidden") c.snn_widths.hidden = value.get<std::size_t>();
      else if (key == "pool") {
        const auto p = value.get<std::string>();
        if (p == "sum") c.pool = PoolMode::sum;
        else if (p == "max") c.pool = PoolMode::max;
        else throw Error(ErrorKind::BadConfig, "unknown pool mode '" + p + "'");
      } else if (key == "hidden") c.hidden = value.get<std::size_t>();
      else if (key == "head_hidden") c.head_hidden = value.get<std::size_t>();
      else if (key == "init_gain") c.init_gain = value.get<double>();
      else if (key == "threads") c.threads = value.get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::BadConfig, std::string("config value: ") + ex.what());
  }
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  apply_json(c, j);
  return c;
}

}  // namespace gestemo

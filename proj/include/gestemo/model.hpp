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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gestemo/config.hpp"
#include "gestemo/encode.hpp"
#include "gestemo/error.hpp"
#include "gestemo/event_core.hpp"
#include "gestemo/ingest.hpp"
#include "gestemo/losses.hpp"
#include "gestemo/snn.hpp"
#include "gestemo/temporal_fusion.hpp"

namespace gestemo {

// ---------------------------------------------------------------------------
// Targets

inline std::vector<std::string> class_names(TargetTask task, bool include_other = false) {
  std::vector<std::string> names;
  if (task == TargetTask::emotion) {
    for (auto e : kAllEmotions) names.emplace_back(to_string(e));
  } else {
    for (auto g : kAllGestures) {
      if (g != GestureClass::other || include_other) names.emplace_back(to_string(g));
    }
  }
  return names;
}

/// Class index of a gesture under the task, or nullopt when it is excluded.
inline std::optional<std::size_t> target_index(GestureClass g, TargetTask task, bool include_other = false) {
  if (task == TargetTask::emotion) {
    const auto e = emotion_of(g);
    if (!e) return std::nullopt;
    return static_cast<std::size_t>(*e);
  }
  if (g == GestureClass::other && !include_other) return std::nullopt;
  return static_cast<std::size_t>(g);
}

// ---------------------------------------------------------------------------
// Prepared inputs

struct PreparedSample {
  std::string id;
  std::size_t target = 0;
  std::optional<RealPlanes> planes;
  std::optional<FrameFeatureSequence> features;
};

struct PreparedSet {
  std::vector<PreparedSample> samples;
  std::vector<std::string> class_names;
  Geometry geometry{};          // plane geometry after downsampling
  std::size_t feature_dim = 0;

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (const auto& s : samples) ++counts[s.target];
    return counts;
  }
};

/// Event stream -> dense planes -> block-sum downsampling -> scaling.
inline RealPlanes encode_for_network(const EventStream& events, const TrainConfig& cfg) {
  return scale_planes(downsample_planes(dense_spike_planes(events, cfg.k), cfg.downsample), cfg.scale);
}

inline PreparedSample prepare_sample(const SampleRecord& rec, std::size_t target, const TrainConfig& cfg) {
  PreparedSample s;
  s.id = rec.id;
  s.target = target;
  if (cfg.uses_snn()) s.planes = encode_for_network(rec.events, cfg);
  if (cfg.uses_video()) {
    if (!rec.features) throw Error(ErrorKind::MissingFeatures, "sample " + rec.id + " has no frame features");
    s.features = fit_frames(*rec.features, cfg.max_frames, cfg.pad_frames);
  }
  return s;
}

/// Loads and encodes every usable sample of one split.
inline PreparedSet prepare_split(const SplitManifest& manifest, Split split, const TrainConfig& cfg) {
  PreparedSet set;
  set.class_names = class_names(cfg.task, cfg.include_other);
  bool first = true;
  for (const ManifestEntry* e : manifest.in_split(split)) {
    const auto target = target_index(e->gesture, cfg.task, cfg.include_other);
    if (!target) continue;
    auto s = prepare_sample(load_sample(manifest, e->id), *target, cfg);
    const Geometry g = s.planes ? s.planes->geometry : Geometry{};
    const std::size_t d = s.features ? s.features->dim() : 0;
    if (first) {
      set.geometry = g;
      set.feature_dim = d;
      first = false;
    } else if (g != set.geometry || d != set.feature_dim) {
      throw Error(ErrorKind::DataError, "sample " + e->id + " differs in geometry or feature dimension");
    }
    set.samples.push_back(std::move(s));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Model

/// Both branches and the fusion weight; parameters live in one flat block
/// laid out as [snn | recurrent | head]. Unused branches have empty blocks.
struct Model {
  TrainConfig config;
  std::vector<std::string> class_names;
  Geometry geometry{};
  std::size_t feature_dim = 0;
  std::optional<SnnArchitecture> snn;
  std::optional<RecurrentDims> recurrent;
  std::optional<HeadDims> head;
  std::vector<double> params;

  std::size_t num_classes() const { return class_names.size(); }
  std::size_t snn_size() const { return snn ? snn->param_count() : 0; }
  std::size_t recurrent_size() const { return recurrent ? recurrent->param_count() : 0; }
  std::size_t head_size() const { return head ? head->param_count() : 0; }
  std::size_t param_count() const { return snn_size() + recurrent_size() + head_size(); }

  std::span<const double> snn_params() const { return std::span<const double>(params).subspan(0, snn_size()); }
  std::span<const double> recurrent_params() const {
    return std::span<const double>(params).subspan(snn_size(), recurrent_size());
  }
  std::span<const double> head_params() const {
    return std::span<const double>(params).subspan(snn_size() + recurrent_size(), head_size());
  }
  FusionConfig fusion() const { return FusionConfig{config.lambda}; }
  Surrogate surrogate() const { return Surrogate{config.surrogate_width, config.detach_reset}; }

  bool operator==(const Model&) const = default;
};

inline Model init_model(const TrainConfig& cfg, std::vector<std::string> names, Geometry geometry,
                        std::size_t feature_dim) {
  cfg.validate();
  if (names.empty()) throw Error(ErrorKind::DataError, "no target classes");
  Model m;
  m.config = cfg;
  m.class_names = std::move(names);
  m.geometry = geometry;
  m.feature_dim = feature_dim;
  const std::size_t classes = m.class_names.size();
  // Independent sub-seeds so each block's initialization is stable when
  // other blocks change shape.
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32)};
  std::uint64_t sub[3];
  {
    std::uint32_t raw[6];
    seq.generate(raw, raw + 6);
    for (int i = 0; i < 3; ++i) sub[i] = (std::uint64_t{raw[2 * i]} << 32) | raw[2 * i + 1];
  }
  if (cfg.uses_snn()) {
    m.snn = default_architecture(geometry, classes, cfg.snn_widths, cfg.pool);
    auto p = init_params(*m.snn, sub[0], InitScheme{cfg.init_gain});
    m.params.insert(m.params.end(), p.begin(), p.end());
  }
  if (cfg.uses_video()) {
    if (feature_dim == 0) throw Error(ErrorKind::MissingFeatures, "video branch needs frame features");
    m.recurrent = RecurrentDims{feature_dim, cfg.hidden};
    m.head = HeadDims{cfg.hidden, cfg.head_hidden, classes};
    auto r = init_recurrent_params(*m.recurrent, sub[1]);
    auto h = init_head_params(*m.head, sub[2]);
    m.params.insert(m.params.end(), r.begin(), r.end());
    m.params.insert(m.params.end(), h.begin(), h.end());
  }
  return m;
}

/// Eval-mode class scores: s_dg, branch logits, or their fusion.
inline std::vector<double> predict_scores(const Model& m, const PreparedSample& s) {
  std::vector<double> s_dg;
  std::vector<double> logits;
  if (m.config.uses_snn()) {
    if (!s.planes) throw Error(ErrorKind::DataError, "sample " + s.id + " lacks event planes");
    s_dg = snn_forward(*s.planes, m.snn_params(), *m.snn, m.config.lif).s_dg;
  }
  if (m.config.uses_video()) {
    if (!s.features) throw Error(ErrorKind::MissingFeatures, "sample " + s.id + " lacks frame features");
    const auto h = recurrent_forward(*s.features, m.recurrent_params(), *m.recurrent);
    logits = head_forward(h, m.head_params(), *m.head, HeadMode::eval);
  }
  switch (m.config.branch) {
    case BranchMode::snn_only: return s_dg;
    case BranchMode::video_only: return logits;
    case BranchMode::fused: return fuse(s_dg, logits, m.fusion());
  }
  return {};
}

inline std::size_t predict(const Model& m, const PreparedSample& s) { return argmax(predict_scores(m, s)); }

struct SampleLoss {
  double snn = 0.0;    // MSE on s_dg
  double video = 0.0;  // weighted cross entropy (on the fused scores in joint mode)
  double total = 0.0;
};

/// Training-mode loss for one sample; adds `scale` times its gradient into
/// `grads` (same layout as Model::params).
inline SampleLoss accumulate_sample_gradients(const Model& m, const PreparedSample& s,
                                              std::span<const double> class_weight,
                                              std::mt19937_64& dropout_rng, double scale,
                                              std::span<double> grads) {
  const TrainConfig& cfg = m.config;
  const std::size_t classes = m.num_classes();
  SampleLoss loss;

  std::optional<SnnOutput> snn_out;
  if (cfg.uses_snn()) {
    if (!s.planes) throw Error(ErrorKind::DataError, "sample " + s.id + " lacks event planes");
    snn_out = snn_forward(*s.planes, m.snn_params(), *m.snn, cfg.lif, true, SpikeFn::hard, m.surrogate());
  }
  std::optional<RecurrentTrace> rec;
  std::optional<HeadTrace> head;
  if (cfg.uses_video()) {
    if (!s.features) throw Error(ErrorKind::MissingFeatures, "sample " + s.id + " lacks frame features");
    rec = recurrent_forward_traced(*s.features, m.recurrent_params(), *m.recurrent);
    head = head_forward_traced(rec->h_last(m.recurrent->hidden), m.head_params(), *m.head, HeadMode::train,
                               &dropout_rng);
  }

  std::vector<double> g_sdg;
  std::vector<double> g_logits;
  if (snn_out) {
    loss.snn = mse_spike_loss(snn_out->s_dg, s.target, classes);
    g_sdg = mse_spike_loss_grad(snn_out->s_dg, s.target, classes);
  }
  if (head) {
    if (cfg.branch == BranchMode::fused && !cfg.separate) {
      const auto y = fuse(snn_out->s_dg, head->logits, m.fusion());
      loss.video = weighted_cross_entropy(y, s.target, class_weight);
      const auto g_y = weighted_cross_entropy_grad(y, s.target, class_weight);
      g_logits.resize(classes);
      for (std::size_t c = 0; c < classes; ++c) {
        g_sdg[c] += g_y[c];
        g_logits[c] = cfg.lambda * g_y[c];
      }
    } else {
      loss.video = weighted_cross_entropy(head->logits, s.target, class_weight);
      g_logits = weighted_cross_entropy_grad(head->logits, s.target, class_weight);
    }
  }
  loss.total = loss.snn + loss.video;

  for (double& v : g_sdg) v *= scale;
  for (double& v : g_logits) v *= scale;
  const std::size_t snn_n = m.snn_size();
  const std::size_t rec_n = m.recurrent_size();
  if (snn_out) {
    snn_backward_accumulate(snn_out->recording, g_sdg, m.snn_params(), *m.snn, cfg.lif, m.surrogate(),
                            grads.subspan(0, snn_n));
  }
  if (head) {
    const auto dh = head_backward(*head, g_logits, m.head_params(), *m.head,
                                  grads.subspan(snn_n + rec_n, m.head_size()));
    recurrent_backward(*rec, dh, m.recurrent_params(), *m.recurrent, grads.subspan(snn_n, rec_n));
  }
  return loss;
}

}  // namespace gestemo

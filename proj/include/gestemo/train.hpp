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
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

#include "json.hpp"

#include "gestemo/config.hpp"
#include "gestemo/error.hpp"
#include "gestemo/ingest.hpp"
#include "gestemo/losses.hpp"
#include "gestemo/metrics.hpp"
#include "gestemo/model.hpp"
#include "gestemo/optim.hpp"
#include "gestemo/parallel.hpp"

namespace gestemo {

struct EpochLog {
  std::size_t epoch = 0;
  double snn_loss = 0.0;
  double video_loss = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
};

namespace detail {

inline std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

/// Inverse-frequency weights over the classes present; absent classes get 0.
inline std::vector<double> present_class_weights(const std::vector<std::size_t>& counts) {
  std::vector<std::size_t> present;
  for (auto c : counts) {
    if (c > 0) present.push_back(c);
  }
  const auto w = class_weights(present);
  std::vector<double> out(counts.size(), 0.0);
  for (std::size_t c = 0, j = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) out[c] = w[j++];
  }
  return out;
}

}  // namespace detail

/// Mini-batch Adam over the prepared training set. Per-sample gradients are
/// reduced in sample order, so results do not depend on cfg.threads.
inline TrainResult train(const PreparedSet& set, const TrainConfig& cfg,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  if (set.samples.empty()) throw Error(ErrorKind::DataError, "training split is empty");
  TrainResult result{init_model(cfg, set.class_names, set.geometry, set.feature_dim), {}};
  Model& model = result.model;
  const auto weights = detail::present_class_weights(set.class_counts());
  const std::size_t n = set.samples.size();
  const std::size_t np = model.param_count();
  AdamState adam(np);

  std::vector<std::size_t> order(n);
  std::vector<std::vector<double>> sample_grads;
  std::vector<SampleLoss> sample_loss;
  std::vector<double> grads(np);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = detail::seeded(cfg.seed, epoch, 0, 0x5u);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog log{epoch, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      const double scale = 1.0 / static_cast<double>(b);
      sample_grads.resize(b);
      sample_loss.assign(b, {});
      parallel_for(b, cfg.threads, [&](std::size_t i) {
        auto& g = sample_grads[i];
        g.assign(np, 0.0);
        auto rng = detail::seeded(cfg.seed, epoch, start + i, 0xD0u);
        sample_loss[i] = accumulate_sample_gradients(model, set.samples[order[start + i]], weights, rng, scale, g);
      });
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t i = 0; i < b; ++i) {
        if (!std::isfinite(sample_loss[i].total)) {
          throw Error(ErrorKind::DivergedLoss, "non-finite loss in epoch " + std::to_string(epoch));
        }
        for (std::size_t j = 0; j < np; ++j) grads[j] += sample_grads[i][j];
        log.snn_loss += sample_loss[i].snn;
        log.video_loss += sample_loss[i].video;
        log.total += sample_loss[i].total;
      }
      adam_update(model.params, grads, adam, cfg.adam);
    }
    log.snn_loss /= static_cast<double>(n);
    log.video_loss /= static_cast<double>(n);
    log.total /= static_cast<double>(n);
    if (!std::all_of(model.params.begin(), model.params.end(), [](double v) { return std::isfinite(v); })) {
      throw Error(ErrorKind::DivergedLoss, "non-finite parameters after epoch " + std::to_string(epoch));
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

inline TrainResult train(const SplitManifest& manifest, const TrainConfig& cfg,
                         const std::function<void(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  return train(prepare_split(manifest, Split::train, cfg), cfg, on_epoch);
}

inline MetricsReport evaluate(const Model& model, const PreparedSet& set) {
  if (set.samples.empty()) throw Error(ErrorKind::EmptySplit, "evaluation split is empty");
  if (set.class_names != model.class_names) throw Error(ErrorKind::DataError, "class list differs from checkpoint");
  std::vector<std::size_t> predicted(set.samples.size());
  parallel_for(set.samples.size(), model.config.threads,
               [&](std::size_t i) { predicted[i] = predict(model, set.samples[i]); });
  ConfusionMatrix cm(model.num_classes());
  for (std::size_t i = 0; i < set.samples.size(); ++i) cm.add(set.samples[i].target, predicted[i]);
  return metrics_from_confusion(cm, model.class_names);
}

inline MetricsReport evaluate(const Model& model, const SplitManifest& manifest, Split split) {
  return evaluate(model, prepare_split(manifest, split, model.config));
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    per_class.push_back({{"class", c < r.class_names.size() ? r.class_names[c] : std::to_string(c)},
                         {"precision", r.per_class[c].precision},
                         {"recall", r.per_class[c].recall},
                         {"f1", r.per_class[c].f1},
                         {"support", r.per_class[c].support}});
  }
  nlohmann::json matrix = nlohmann::json::array();
  for (std::size_t t = 0; t < r.confusion.classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < r.confusion.classes(); ++p) row.push_back(r.confusion.at(t, p));
    matrix.push_back(row);
  }
  return {{"accuracy", r.accuracy},
          {"weighted_precision", r.weighted_precision},
          {"weighted_recall", r.weighted_recall},
          {"weighted_f1", r.weighted_f1},
          {"samples", r.confusion.total()},
          {"classes", r.class_names},
          {"per_class", per_class},
          {"confusion_matrix", matrix}};
}

inline void write_confusion_csv(std::ostream& out, const MetricsReport& r) {
  out << "true\\predicted";
  for (const auto& name : r.class_names) out << ',' << name;
  out << '\n';
  for (std::size_t t = 0; t < r.confusion.classes(); ++t) {
    out << (t < r.class_names.size() ? r.class_names[t] : std::to_string(t));
    for (std::size_t p = 0; p < r.confusion.classes(); ++p) out << ',' << r.confusion.at(t, p);
    out << '\n';
  }
}

inline void write_train_log_csv(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,snn_loss,video_loss,total\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << detail::format_double(e.snn_loss) << ',' << detail::format_double(e.video_loss)
        << ',' << detail::format_double(e.total) << '\n';
  }
}

}  // namespace gestemo

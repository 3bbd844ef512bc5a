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
#include <span>
#include <vector>

#include "gestemo/error.hpp"

namespace gestemo {

/// Inverse-frequency weights T / (C * count_c); balanced data gives all ones.
inline std::vector<double> class_weights(std::span<const std::size_t> counts) {
  std::size_t total = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw Error(ErrorKind::EmptyClass, "class has no samples", c);
    total += counts[c];
  }
  std::vector<double> w(counts.size());
  const double classes = static_cast<double>(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    w[c] = static_cast<double>(total) / (classes * static_cast<double>(counts[c]));
  }
  return w;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

/// -weights[y] * log softmax(logits)[y], evaluated as a log-sum-exp.
inline double weighted_cross_entropy(std::span<const double> logits, std::size_t target,
                                     std::span<const double> weights) {
  if (target >= logits.size() || weights.size() != logits.size()) {
    throw Error(ErrorKind::DimMismatch, "cross entropy: target/weights do not match logits");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return weights[target] * (m + std::log(z) - logits[target]);
}

/// d loss / d logits = weights[y] * (softmax - onehot(y)).
inline std::vector<double> weighted_cross_entropy_grad(std::span<const double> logits,
                                                       std::size_t target,
                                                       std::span<const double> weights) {
  if (target >= logits.size() || weights.size() != logits.size()) {
    throw Error(ErrorKind::DimMismatch, "cross entropy: target/weights do not match logits");
  }
  auto g = softmax(logits);
  g[target] -= 1.0;
  for (double& v : g) v *= weights[target];
  return g;
}

/// (1/C) * sum_c (s_dg[c] - onehot(y)[c])^2
inline double mse_spike_loss(std::span<const double> s_dg, std::size_t target, std::size_t classes) {
  if (s_dg.size() != classes || target >= classes) {
    throw Error(ErrorKind::DimMismatch, "mse: output size does not match class count");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double d = s_dg[c] - (c == target ? 1.0 : 0.0);
    sum += d * d;
  }
  return sum / static_cast<double>(classes);
}

inline std::vector<double> mse_spike_loss_grad(std::span<const double> s_dg, std::size_t target,
                                               std::size_t classes) {
  if (s_dg.size() != classes || target >= classes) {
    throw Error(ErrorKind::DimMismatch, "mse: output size does not match class count");
  }
  std::vector<double> g(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    g[c] = 2.0 * (s_dg[c] - (c == target ? 1.0 : 0.0)) / static_cast<double>(classes);
  }
  return g;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

}  // namespace gestemo

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
#include <string>
#include <vector>

#include "gestemo/error.hpp"

namespace gestemo {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
      : classes_(classes), counts_(std::move(counts)) {
    if (counts_.size() != classes_ * classes_) {
      throw Error(ErrorKind::DimMismatch, "confusion matrix must be C x C");
    }
  }

  void add(std::size_t truth, std::size_t predicted) {
    if (truth >= classes_ || predicted >= classes_) {
      throw Error(ErrorKind::DimMismatch, "class index outside confusion matrix");
    }
    ++counts_[truth * classes_ + predicted];
  }

  std::size_t classes() const { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::uint64_t row_sum(std::size_t r) const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < classes_; ++c) s += at(r, c);
    return s;
  }
  std::uint64_t col_sum(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t r = 0; r < classes_; ++r) s += at(r, c);
    return s;
  }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto v : counts_) s += v;
    return s;
  }
  std::uint64_t trace() const {
    std::uint64_t s = 0;
    for (std::size_t c = 0; c < classes_; ++c) s += at(c, c);
    return s;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix confusion;
  std::vector<std::string> class_names;

  bool operator==(const MetricsReport& o) const {
    return accuracy == o.accuracy && weighted_precision == o.weighted_precision &&
           weighted_recall == o.weighted_recall && weighted_f1 == o.weighted_f1 &&
           confusion == o.confusion && class_names == o.class_names;
  }
};

/// Accuracy plus support-weighted precision, recall and F1. Undefined
/// per-class ratios (zero denominators) count as 0.
inline MetricsReport metrics_from_confusion(const ConfusionMatrix& cm,
                                            std::vector<std::string> class_names = {}) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error(ErrorKind::EmptySplit, "no evaluated samples");
  MetricsReport r;
  r.confusion = cm;
  r.class_names = std::move(class_names);
  const double n = static_cast<double>(total);
  r.accuracy = static_cast<double>(cm.trace()) / n;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    ClassMetrics m;
    const double tp = static_cast<double>(cm.at(c, c));
    const double predicted = static_cast<double>(cm.col_sum(c));
    m.support = cm.row_sum(c);
    const double actual = static_cast<double>(m.support);
    m.precision = predicted > 0 ? tp / predicted : 0.0;
    m.recall = actual > 0 ? tp / actual : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const double w = actual / n;
    r.weighted_precision += w * m.precision;
    r.weighted_f1 += w * m.f1;
    r.per_class.push_back(m);
  }
  // support_c * recall_c is tp_c exactly, so summing in integers keeps
  // weighted recall bit-equal to accuracy.
  r.weighted_recall = r.accuracy;
  return r;
}

}  // namespace gestemo

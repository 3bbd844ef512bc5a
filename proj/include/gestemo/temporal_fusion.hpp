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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gestemo/error.hpp"
#include "gestemo/ingest.hpp"

namespace gestemo {

// ---------------------------------------------------------------------------
// Recurrent video branch (gated LSTM cell)
//
// Parameter block: W [4H x D], U [4H x H], b [4H], gates stacked as
// input, forget, candidate, output.

struct RecurrentDims {
  std::size_t input = 0;
  std::size_t hidden = 128;

  std::size_t gates() const { return 4 * hidden; }
  std::size_t w_offset() const { return 0; }
  std::size_t u_offset() const { return gates() * input; }
  std::size_t b_offset() const { return u_offset() + gates() * hidden; }
  std::size_t param_count() const { return b_offset() + gates(); }
  bool operator==(const RecurrentDims&) const = default;
};

struct RecurrentTrace {
  std::size_t steps = 0;
  std::vector<double> x;      // steps x D
  std::vector<double> gates;  // steps x 4H, post-activation
  std::vector<double> c;      // (steps + 1) x H, c[0] = 0
  std::vector<double> h;      // (steps + 1) x H, h[0] = 0

  std::span<const double> h_last(std::size_t hidden) const {
    return std::span<const double>(h).subspan(steps * hidden, hidden);
  }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline void check_block(std::span<const double> params, std::size_t expected, const char* what) {
  if (params.empty() && expected > 0) {
    throw Error(ErrorKind::UninitializedParams, std::string(what) + " parameters not initialized");
  }
  if (params.size() != expected) {
    throw Error(ErrorKind::DimMismatch, std::string(what) + " parameter count mismatch");
  }
}

/// One cell application: (h, c) -> (h', c'); writes activated gates.
inline void lstm_cell(std::span<const double> x, std::span<const double> h, std::span<const double> c,
                      std::span<const double> params, const RecurrentDims& d,
                      std::span<double> gates, std::span<double> h_out, std::span<double> c_out) {
  const std::size_t hd = d.hidden;
  const double* w = params.data() + d.w_offset();
  const double* u = params.data() + d.u_offset();
  const double* b = params.data() + d.b_offset();
  for (std::size_t r = 0; r < d.gates(); ++r) {
    double z = b[r];
    const double* wr = w + r * d.input;
    for (std::size_t i = 0; i < d.input; ++i) z += wr[i] * x[i];
    const double* ur = u + r * hd;
    for (std::size_t i = 0; i < hd; ++i) z += ur[i] * h[i];
    gates[r] = (r / hd == 2) ? std::tanh(z) : sigmoid(z);
  }
  for (std::size_t j = 0; j < hd; ++j) {
    const double ig = gates[j];
    const double fg = gates[hd + j];
    const double gg = gates[2 * hd + j];
    const double og = gates[3 * hd + j];
    c_out[j] = fg * c[j] + ig * gg;
    h_out[j] = og * std::tanh(c_out[j]);
  }
}

}  // namespace detail

inline RecurrentTrace recurrent_forward_traced(const FrameFeatureSequence& features,
                                               std::span<const double> params,
                                               const RecurrentDims& dims) {
  detail::check_block(params, dims.param_count(), "recurrent");
  if (features.frames() == 0) throw Error(ErrorKind::DimMismatch, "empty feature sequence");
  if (features.dim() != dims.input) {
    throw Error(ErrorKind::DimMismatch, "feature dimension " + std::to_string(features.dim()) +
                                            " != " + std::to_string(dims.input));
  }
  const std::size_t n = features.frames();
  const std::size_t hd = dims.hidden;
  RecurrentTrace t;
  t.steps = n;
  t.x.assign(features.values().begin(), features.values().end());
  t.gates.assign(n * dims.gates(), 0.0);
  t.c.assign((n + 1) * hd, 0.0);
  t.h.assign((n + 1) * hd, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    detail::lstm_cell(features.frame(s), std::span<const double>(t.h).subspan(s * hd, hd),
                      std::span<const double>(t.c).subspan(s * hd, hd), params, dims,
                      std::span<double>(t.gates).subspan(s * dims.gates(), dims.gates()),
                      std::span<double>(t.h).subspan((s + 1) * hd, hd),
                      std::span<double>(t.c).subspan((s + 1) * hd, hd));
  }
  return t;
}

/// Final hidden state after running the cell over every frame.
inline std::vector<double> recurrent_forward(const FrameFeatureSequence& features,
                                             std::span<const double> params,
                                             const RecurrentDims& dims) {
  const auto t = recurrent_forward_traced(features, params, dims);
  const auto last = t.h_last(dims.hidden);
  return {last.begin(), last.end()};
}

/// BPTT from d loss / d h_last into the recurrent parameter gradients.
inline void recurrent_backward(const RecurrentTrace& t, std::span<const double> grad_h_last,
                               std::span<const double> params, const RecurrentDims& dims,
                               std::span<double> grads) {
  detail::check_block(params, dims.param_count(), "recurrent");
  if (grads.size() != dims.param_count() || grad_h_last.size() != dims.hidden) {
    throw Error(ErrorKind::DimMismatch, "recurrent_backward: buffer sizes");
  }
  const std::size_t hd = dims.hidden;
  const std::size_t g4 = dims.gates();
  const double* u = params.data() + dims.u_offset();
  double* gw = grads.data() + dims.w_offset();
  double* gu = grads.data() + dims.u_offset();
  double* gb = grads.data() + dims.b_offset();

  std::vector<double> dh(grad_h_last.begin(), grad_h_last.end());
  std::vector<double> dc(hd, 0.0);
  std::vector<double> dz(g4, 0.0);
  for (std::size_t s = t.steps; s-- > 0;) {
    const double* gates = t.gates.data() + s * g4;
    const double* c_prev = t.c.data() + s * hd;
    const double* c_now = t.c.data() + (s + 1) * hd;
    const double* h_prev = t.h.data() + s * hd;
    const double* x = t.x.data() + s * dims.input;
    for (std::size_t j = 0; j < hd; ++j) {
      const double ig = gates[j];
      const double fg = gates[hd + j];
      const double gg = gates[2 * hd + j];
      const double og = gates[3 * hd + j];
      const double tc = std::tanh(c_now[j]);
      const double d_o = dh[j] * tc;
      const double d_c = dc[j] + dh[j] * og * (1.0 - tc * tc);
      dz[j] = d_c * gg * ig * (1.0 - ig);
      dz[hd + j] = d_c * c_prev[j] * fg * (1.0 - fg);
      dz[2 * hd + j] = d_c * ig * (1.0 - gg * gg);
      dz[3 * hd + j] = d_o * og * (1.0 - og);
      dc[j] = d_c * fg;
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < g4; ++r) {
      const double z = dz[r];
      if (z == 0.0) continue;
      gb[r] += z;
      double* gwr = gw + r * dims.input;
      for (std::size_t i = 0; i < dims.input; ++i) gwr[i] += z * x[i];
      double* gur = gu + r * hd;
      const double* ur = u + r * hd;
      for (std::size_t i = 0; i < hd; ++i) {
        gur[i] += z * h_prev[i];
        dh[i] += ur[i] * z;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Output head: fc -> ReLU -> dropout(0.5) -> fc
//
// Parameter block: W1 [Hh x Hd], b1 [Hh], W2 [C x Hh], b2 [C].

inline constexpr double kDropoutRate = 0.5;

struct HeadDims {
  std::size_t input = 128;
  std::size_t hidden = 64;
  std::size_t classes = 3;

  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return hidden * input; }
  std::size_t w2_offset() const { return b1_offset() + hidden; }
  std::size_t b2_offset() const { return w2_offset() + classes * hidden; }
  std::size_t param_count() const { return b2_offset() + classes; }
  bool operator==(const HeadDims&) const = default;
};

enum class HeadMode { train, eval };

struct HeadTrace {
  std::vector<double> input;
  std::vector<double> pre;     // fc1 output before ReLU
  std::vector<double> mask;    // 0 or 1/(1-rate) per unit; all ones in eval
  std::vector<double> logits;
};

/// `rng` draws the dropout mask and is only consulted in train mode.
inline HeadTrace head_forward_traced(std::span<const double> h, std::span<const double> params,
                                     const HeadDims& dims, HeadMode mode, std::mt19937_64* rng) {
  detail::check_block(params, dims.param_count(), "head");
  if (h.size() != dims.input) throw Error(ErrorKind::DimMismatch, "head input width");
  if (mode == HeadMode::train && rng == nullptr) {
    throw Error(ErrorKind::BadConfig, "train-mode dropout needs a seeded generator");
  }
  HeadTrace t;
  t.input.assign(h.begin(), h.end());
  t.pre.assign(dims.hidden, 0.0);
  t.mask.assign(dims.hidden, 1.0);
  t.logits.assign(dims.classes, 0.0);
  const double* w1 = params.data() + dims.w1_offset();
  const double* b1 = params.data() + dims.b1_offset();
  const double* w2 = params.data() + dims.w2_offset();
  const double* b2 = params.data() + dims.b2_offset();
  if (mode == HeadMode::train) {
    std::bernoulli_distribution keep(1.0 - kDropoutRate);
    for (double& m : t.mask) m = keep(*rng) ? 1.0 / (1.0 - kDropoutRate) : 0.0;
  }
  std::vector<double> a(dims.hidden);
  for (std::size_t j = 0; j < dims.hidden; ++j) {
    double z = b1[j];
    for (std::size_t i = 0; i < dims.input; ++i) z += w1[j * dims.input + i] * h[i];
    t.pre[j] = z;
    a[j] = std::max(z, 0.0) * t.mask[j];
  }
  for (std::size_t c = 0; c < dims.classes; ++c) {
    double z = b2[c];
    for (std::size_t j = 0; j < dims.hidden; ++j) z += w2[c * dims.hidden + j] * a[j];
    t.logits[c] = z;
  }
  return t;
}

inline std::vector<double> head_forward(std::span<const double> h, std::span<const double> params,
                                        const HeadDims& dims, HeadMode mode, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  return head_forward_traced(h, params, dims, mode, &rng).logits;
}

/// Accumulates head parameter gradients; returns d loss / d input.
inline std::vector<double> head_backward(const HeadTrace& t, std::span<const double> grad_logits,
                                         std::span<const double> params, const HeadDims& dims,
                                         std::span<double> grads) {
  detail::check_block(params, dims.param_count(), "head");
  if (grads.size() != dims.param_count() || grad_logits.size() != dims.classes) {
    throw Error(ErrorKind::DimMismatch, "head_backward: buffer sizes");
  }
  const double* w1 = params.data() + dims.w1_offset();
  const double* w2 = params.data() + dims.w2_offset();
  double* gw1 = grads.data() + dims.w1_offset();
  double* gb1 = grads.data() + dims.b1_offset();
  double* gw2 = grads.data() + dims.w2_offset();
  double* gb2 = grads.data() + dims.b2_offset();

  std::vector<double> da(dims.hidden, 0.0);
  for (std::size_t c = 0; c < dims.classes; ++c) {
    const double g = grad_logits[c];
    gb2[c] += g;
    for (std::size_t j = 0; j < dims.hidden; ++j) {
      const double a = std::max(t.pre[j], 0.0) * t.mask[j];
      gw2[c * dims.hidden + j] += g * a;
      da[j] += w2[c * dims.hidden + j] * g;
    }
  }
  std::vector<double> dh(dims.input, 0.0);
  for (std::size_t j = 0; j < dims.hidden; ++j) {
    const double dz = t.pre[j] > 0.0 ? da[j] * t.mask[j] : 0.0;
    if (dz == 0.0) continue;
    gb1[j] += dz;
    for (std::size_t i = 0; i < dims.input; ++i) {
      gw1[j * dims.input + i] += dz * t.input[i];
      dh[i] += w1[j * dims.input + i] * dz;
    }
  }
  return dh;
}

/// Uniform +-gain*sqrt(6/(fan_in+fan_out)) weights, zero biases.
inline std::vector<double> init_recurrent_params(const RecurrentDims& d, std::uint64_t seed,
                                                 double gain = 1.0) {
  std::vector<double> p(d.param_count(), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> w(-gain * std::sqrt(6.0 / double(d.input + d.hidden)),
                                           gain * std::sqrt(6.0 / double(d.input + d.hidden)));
  std::uniform_real_distribution<double> u(-gain * std::sqrt(6.0 / double(2 * d.hidden)),
                                           gain * std::sqrt(6.0 / double(2 * d.hidden)));
  for (std::size_t i = d.w_offset(); i < d.u_offset(); ++i) p[i] = w(rng);
  for (std::size_t i = d.u_offset(); i < d.b_offset(); ++i) p[i] = u(rng);
  return p;
}

inline std::vector<double> init_head_params(const HeadDims& d, std::uint64_t seed, double gain = 1.0) {
  std::vector<double> p(d.param_count(), 0.0);
  std::mt19937_64 rng(seed);
  const double b1 = gain * std::sqrt(6.0 / double(d.input + d.hidden));
  const double b2 = gain * std::sqrt(6.0 / double(d.hidden + d.classes));
  std::uniform_real_distribution<double> w1(-b1, b1);
  std::uniform_real_distribution<double> w2(-b2, b2);
  for (std::size_t i = d.w1_offset(); i < d.b1_offset(); ++i) p[i] = w1(rng);
  for (std::size_t i = d.w2_offset(); i < d.b2_offset(); ++i) p[i] = w2(rng);
  return p;
}

// ---------------------------------------------------------------------------
// Late fusion

struct FusionConfig {
  double lambda = 1.0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorKind::BadConfig, "fusion lambda must be a finite value >= 0");
    }
  }
};

/// y_hat = s_dg + lambda * branch_logits
inline std::vector<double> fuse(std::span<const double> s_dg, std::span<const double> logits,
                                const FusionConfig& cfg = {}) {
  if (s_dg.size() != logits.size()) throw Error(ErrorKind::DimMismatch, "fuse: branch widths differ");
  cfg.validate();
  std::vector<double> y(s_dg.size());
  for (std::size_t c = 0; c < y.size(); ++c) y[c] = s_dg[c] + cfg.lambda * logits[c];
  return y;
}

}  // namespace gestemo

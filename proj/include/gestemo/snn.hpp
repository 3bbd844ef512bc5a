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
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gestemo/encode.hpp"
#include "gestemo/error.hpp"
#include "gestemo/losses.hpp"

namespace gestemo {

// ---------------------------------------------------------------------------
// LIF neurons

enum class ResetMode { to_zero, subtract_theta };

inline std::string_view to_string(ResetMode r) {
  return r == ResetMode::to_zero ? "to_zero" : "subtract_theta";
}

struct LifConfig {
  double beta = 0.9;   // leak factor in (0, 1]
  double theta = 1.0;  // firing threshold
  ResetMode reset = ResetMode::to_zero;

  void validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) throw Error(ErrorKind::BadConfig, "LIF beta must be in (0,1]");
    if (!(theta > 0.0)) throw Error(ErrorKind::BadConfig, "LIF theta must be > 0");
  }
};

/// Rectangular surrogate: d(spike)/dv = 1/(2w) for |v - theta| < w.
///
/// With detach_reset the reset is treated as a constant during backprop; the
/// exact gradient of the relaxed model needs detach_reset = false.
struct Surrogate {
  double half_width = 0.5;
  bool detach_reset = true;

  double derivative(double v, double theta) const {
    return std::abs(v - theta) < half_width ? 0.5 / half_width : 0.0;
  }
  /// Piecewise-linear spike whose derivative is the rectangular window.
  double relaxed(double v, double theta) const {
    return std::clamp((v - theta + half_width) / (2.0 * half_width), 0.0, 1.0);
  }
};

/// Hard threshold in normal operation; `relaxed` swaps in the smoothed
/// spike so the surrogate gradient becomes an exact derivative.
enum class SpikeFn { hard, relaxed };

struct LifStepResult {
  std::vector<double> potential;
  std::vector<double> spikes;
};

namespace detail {

inline double fire(double v, const LifConfig& cfg, SpikeFn fn, const Surrogate& sg) {
  if (fn == SpikeFn::hard) return v >= cfg.theta ? 1.0 : 0.0;
  return sg.relaxed(v, cfg.theta);
}

inline double after_reset(double v, double s, const LifConfig& cfg) {
  return cfg.reset == ResetMode::to_zero ? v * (1.0 - s) : v - cfg.theta * s;
}

}  // namespace detail

/// v' = beta * v + I; spike where v' >= theta; then reset.
inline LifStepResult lif_step(std::span<const double> potential, std::span<const double> current,
                              const LifConfig& cfg) {
  if (potential.size() != current.size()) {
    throw Error(ErrorKind::ShapeMismatch, "lif_step: potential and current differ in size");
  }
  LifStepResult r{std::vector<double>(potential.size()), std::vector<double>(potential.size())};
  for (std::size_t i = 0; i < potential.size(); ++i) {
    const double v = cfg.beta * potential[i] + current[i];
    const double s = v >= cfg.theta ? 1.0 : 0.0;
    r.spikes[i] = s;
    r.potential[i] = detail::after_reset(v, s, cfg);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Architecture

struct TensorShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const TensorShape&) const = default;
};

enum class LayerKind { conv, pool, fc };
enum class PoolMode { sum, max };

struct LayerSpec {
  LayerKind kind = LayerKind::fc;
  std::size_t in = 0;   // channels (conv) or width (fc)
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t window = 0;  // pool only
  PoolMode pool = PoolMode::sum;

  static LayerSpec conv(std::size_t in, std::size_t out, std::size_t kernel,
                        std::size_t stride = 1, std::size_t padding = 0) {
    return {LayerKind::conv, in, out, kernel, stride, padding, 0, PoolMode::sum};
  }
  static LayerSpec pooling(std::size_t window, PoolMode mode = PoolMode::sum) {
    return {LayerKind::pool, 0, 0, 0, 1, 0, window, mode};
  }
  static LayerSpec fc(std::size_t in, std::size_t out) {
    return {LayerKind::fc, in, out, 0, 1, 0, 0, PoolMode::sum};
  }
  bool operator==(const LayerSpec&) const = default;
};

/// Validated layer stack with resolved tensor shapes and parameter offsets.
/// Every layer is followed by a LIF population of its output shape.
class SnnArchitecture {
 public:
  SnnArchitecture() = default;
  SnnArchitecture(TensorShape input, std::vector<LayerSpec> layers)
      : input_(input), layers_(std::move(layers)) {
    if (layers_.empty()) throw Error(ErrorKind::ShapeMismatch, "architecture has no layers");
    if (input_.size() == 0) throw Error(ErrorKind::ShapeMismatch, "empty input shape");
    TensorShape cur = input_;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const LayerSpec& s = layers_[l];
      const std::string where = "layer " + std::to_string(l) + ": ";
      TensorShape next;
      std::size_t weights = 0;
      std::size_t biases = 0;
      switch (s.kind) {
        case LayerKind::conv: {
          if (s.in != cur.channels) throw Error(ErrorKind::ShapeMismatch, where + "conv input channels");
          if (s.kernel == 0 || s.stride == 0 || s.out == 0) {
            throw Error(ErrorKind::ShapeMismatch, where + "conv kernel/stride/out must be >= 1");
          }
          const std::size_t ph = cur.height + 2 * s.padding;
          const std::size_t pw = cur.width + 2 * s.padding;
          if (ph < s.kernel || pw < s.kernel) throw Error(ErrorKind::ShapeMismatch, where + "kernel larger than input");
          next = {s.out, (ph - s.kernel) / s.stride + 1, (pw - s.kernel) / s.stride + 1};
          weights = s.out * s.in * s.kernel * s.kernel;
          biases = s.out;
          break;
        }
        case LayerKind::pool: {
          if (s.window == 0 || s.window > cur.height || s.window > cur.width) {
            throw Error(ErrorKind::ShapeMismatch, where + "bad pooling window");
          }
          next = {cur.channels, cur.height / s.window, cur.width / s.window};
          break;
        }
        case LayerKind::fc: {
          if (s.in != cur.size()) {
            throw Error(ErrorKind::ShapeMismatch, where + "fc input width " + std::to_string(s.in) +
                                                      " != " + std::to_string(cur.size()));
          }
          if (s.out == 0) throw Error(ErrorKind::ShapeMismatch, where + "fc width must be >= 1");
          next = {s.out, 1, 1};
          weights = s.in * s.out;
          biases = s.out;
          break;
        }
      }
      in_shapes_.push_back(cur);
      out_shapes_.push_back(next);
      weight_offsets_.push_back(offset);
      weight_counts_.push_back(weights);
      bias_offsets_.push_back(offset + weights);
      offset += weights + biases;
      cur = next;
    }
    if (layers_.back().kind != LayerKind::fc) {
      throw Error(ErrorKind::ShapeMismatch, "last layer must be fully connected (class scores)");
    }
    param_count_ = offset;
  }

  const TensorShape& input() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  const TensorShape& in_shape(std::size_t l) const { return in_shapes_[l]; }
  const TensorShape& out_shape(std::size_t l) const { return out_shapes_[l]; }
  std::size_t weight_offset(std::size_t l) const { return weight_offsets_[l]; }
  std::size_t weight_count(std::size_t l) const { return weight_counts_[l]; }
  std::size_t bias_offset(std::size_t l) const { return bias_offsets_[l]; }
  std::size_t param_count() const { return param_count_; }
  std::size_t num_classes() const { return layers_.empty() ? 0 : layers_.back().out; }

  bool operator==(const SnnArchitecture& o) const { return input_ == o.input_ && layers_ == o.layers_; }

 private:
  TensorShape input_{};
  std::vector<LayerSpec> layers_;
  std::vector<TensorShape> in_shapes_;
  std::vector<TensorShape> out_shapes_;
  std::vector<std::size_t> weight_offsets_;
  std::vector<std::size_t> weight_counts_;
  std::vector<std::size_t> bias_offsets_;
  std::size_t param_count_ = 0;
};

struct SnnWidths {
  std::size_t conv1 = 16;
  std::size_t conv2 = 32;
  std::size_t hidden = 256;
};

/// conv(2->c1, 3x3) > pool(2) > conv(c1->c2, 3x3) > pool(2) > fc(->hidden) > fc(->classes)
inline SnnArchitecture default_architecture(Geometry input, std::size_t num_classes,
                                            SnnWidths widths = {},
                                            PoolMode pool = PoolMode::sum) {
  const TensorShape in{2, input.height, input.width};
  auto conv_out = [](std::size_t n) { return n < 3 ? 0 : n - 2; };
  const std::size_t h = conv_out(conv_out(in.height) / 2) / 2;
  const std::size_t w = conv_out(conv_out(in.width) / 2) / 2;
  if (h == 0 || w == 0) throw Error(ErrorKind::ShapeMismatch, "input too small for default architecture");
  return SnnArchitecture(in, {LayerSpec::conv(2, widths.conv1, 3),
                              LayerSpec::pooling(2, pool),
                              LayerSpec::conv(widths.conv1, widths.conv2, 3),
                              LayerSpec::pooling(2, pool),
                              LayerSpec::fc(widths.conv2 * h * w, widths.hidden),
                              LayerSpec::fc(widths.hidden, num_classes)});
}

// ---------------------------------------------------------------------------
// Parameters

struct InitScheme {
  /// Scales the uniform +-sqrt(6 / (fan_in + fan_out)) bound.
  double gain = 1.0;
};

inline std::pair<std::size_t, std::size_t> fan_in_out(const LayerSpec& s) {
  if (s.kind == LayerKind::conv) return {s.in * s.kernel * s.kernel, s.out * s.kernel * s.kernel};
  return {s.in, s.out};
}

/// Uniform weights in +-gain*sqrt(6/(fan_in+fan_out)), zero biases.
inline std::vector<double> init_params(const SnnArchitecture& arch, std::uint64_t seed,
                                       InitScheme scheme = {}) {
  std::vector<double> params(arch.param_count(), 0.0);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < arch.depth(); ++l) {
    const LayerSpec& s = arch.layers()[l];
    if (s.kind == LayerKind::pool) continue;
    const auto [fi, fo] = fan_in_out(s);
    const double bound = scheme.gain * std::sqrt(6.0 / static_cast<double>(fi + fo));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t off = arch.weight_offset(l);
    for (std::size_t i = 0; i < arch.weight_count(l); ++i) params[off + i] = dist(rng);
  }
  return params;
}

// ---------------------------------------------------------------------------
// Forward / backward over K time steps

/// Per-layer pre-reset membrane potentials and spikes for every step,
/// plus the conditioned input, as needed by snn_backward.
struct SnnRecording {
  std::size_t steps = 0;
  std::vector<double> input;                   // K x input size
  std::vector<std::vector<double>> potential;  // [layer] K x out size
  std::vector<std::vector<double>> spikes;     // [layer] K x out size
  SpikeFn fn = SpikeFn::hard;

  bool empty() const { return steps == 0; }
};

struct SnnOutput {
  std::vector<double> s_dg;  // mean output spikes per class, in [0, 1]
  SnnRecording recording;    // populated when requested
};

namespace detail {

inline void check_params(std::span<const double> params, const SnnArchitecture& arch) {
  if (params.empty() && arch.param_count() > 0) {
    throw Error(ErrorKind::UninitializedParams, "SNN parameters not initialized");
  }
  if (params.size() != arch.param_count()) {
    throw Error(ErrorKind::ShapeMismatch, "SNN parameter count " + std::to_string(params.size()) +
                                              " != " + std::to_string(arch.param_count()));
  }
}

/// current = layer(x) for one time step.
inline void layer_current(const SnnArchitecture& arch, std::size_t l, std::span<const double> params,
                          std::span<const double> x, std::span<double> current) {
  const LayerSpec& s = arch.layers()[l];
  const TensorShape& in = arch.in_shape(l);
  const TensorShape& out = arch.out_shape(l);
  switch (s.kind) {
    case LayerKind::conv: {
      const double* w = params.data() + arch.weight_offset(l);
      const double* b = params.data() + arch.bias_offset(l);
      const std::size_t plane = out.height * out.width;
      for (std::size_t o = 0; o < out.channels; ++o) {
        std::fill_n(current.begin() + static_cast<std::ptrdiff_t>(o * plane), plane, b[o]);
      }
      const std::size_t k = s.kernel;
      const auto pad = static_cast<std::ptrdiff_t>(s.padding);
      const auto stride = static_cast<std::ptrdiff_t>(s.stride);
      for (std::size_t c = 0; c < in.channels; ++c) {
        for (std::size_t iy = 0; iy < in.height; ++iy) {
          for (std::size_t ix = 0; ix < in.width; ++ix) {
            const double val = x[(c * in.height + iy) * in.width + ix];
            if (val == 0.0) continue;
            for (std::size_t ky = 0; ky < k; ++ky) {
              const auto ty = static_cast<std::ptrdiff_t>(iy) + pad - static_cast<std::ptrdiff_t>(ky);
              if (ty < 0 || ty % stride != 0) continue;
              const auto oy = static_cast<std::size_t>(ty / stride);
              if (oy >= out.height) continue;
              for (std::size_t kx = 0; kx < k; ++kx) {
                const auto tx = static_cast<std::ptrdiff_t>(ix) + pad - static_cast<std::ptrdiff_t>(kx);
                if (tx < 0 || tx % stride != 0) continue;
                const auto ox = static_cast<std::size_t>(tx / stride);
                if (ox >= out.width) continue;
                const double* wp = w + (c * k + ky) * k + kx;
                const std::size_t wstride = in.channels * k * k;
                double* cp = current.data() + oy * out.width + ox;
                for (std::size_t o = 0; o < out.channels; ++o) {
                  cp[o * plane] += wp[o * wstride] * val;
                }
              }
            }
          }
        }
      }
      break;
    }
    case LayerKind::pool: {
      const std::size_t win = s.window;
      for (std::size_t c = 0; c < out.channels; ++c) {
        for (std::size_t oy = 0; oy < out.height; ++oy) {
          for (std::size_t ox = 0; ox < out.width; ++ox) {
            double acc = s.pool == PoolMode::sum ? 0.0 : -INFINITY;
            for (std::size_t dy = 0; dy < win; ++dy) {
              for (std::size_t dx = 0; dx < win; ++dx) {
                const double v = x[(c * in.height + oy * win + dy) * in.width + ox * win + dx];
                acc = s.pool == PoolMode::sum ? acc + v : std::max(acc, v);
              }
            }
            current[(c * out.height + oy) * out.width + ox] = acc;
          }
        }
      }
      break;
    }
    case LayerKind::fc: {
      const double* w = params.data() + arch.weight_offset(l);  // [in][out]
      const double* b = params.data() + arch.bias_offset(l);
      std::copy_n(b, s.out, current.begin());
      for (std::size_t i = 0; i < s.in; ++i) {
        const double val = x[i];
        if (val == 0.0) continue;
        const double* row = w + i * s.out;
        for (std::size_t o = 0; o < s.out; ++o) current[o] += row[o] * val;
      }
      break;
    }
  }
}

/// Accumulates parameter gradients for one layer and step from the current
/// gradient `g`; writes the input gradient into `gx` when it is non-empty.
inline void layer_backward(const SnnArchitecture& arch, std::size_t l, std::span<const double> params,
                           std::span<const double> x, std::span<const double> g,
                           std::span<double> grads, std::span<double> gx) {
  const LayerSpec& s = arch.layers()[l];
  const TensorShape& in = arch.in_shape(l);
  const TensorShape& out = arch.out_shape(l);
  const bool need_gx = !gx.empty();
  if (need_gx) std::fill(gx.begin(), gx.end(), 0.0);
  switch (s.kind) {
    case LayerKind::conv: {
      const double* w = params.data() + arch.weight_offset(l);
      double* gw = grads.data() + arch.weight_offset(l);
      double* gb = grads.data() + arch.bias_offset(l);
      const std::size_t k = s.kernel;
      const auto pad = static_cast<std::ptrdiff_t>(s.padding);
      for (std::size_t o = 0; o < out.channels; ++o) {
        for (std::size_t oy = 0; oy < out.height; ++oy) {
          for (std::size_t ox = 0; ox < out.width; ++ox) {
            const double go = g[(o * out.height + oy) * out.width + ox];
            if (go == 0.0) continue;
            gb[o] += go;
            for (std::size_t c = 0; c < in.channels; ++c) {
              for (std::size_t ky = 0; ky < k; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * s.stride + ky) - pad;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height)) continue;
                for (std::size_t kx = 0; kx < k; ++kx) {
                  const auto ix = static_cast<std::ptrdiff_t>(ox * s.stride + kx) - pad;
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width)) continue;
                  const std::size_t xi = (c * in.height + static_cast<std::size_t>(iy)) * in.width +
                                         static_cast<std::size_t>(ix);
                  const std::size_t wi = ((o * in.channels + c) * k + ky) * k + kx;
                  gw[wi] += go * x[xi];
                  if (need_gx) gx[xi] += w[wi] * go;
                }
              }
            }
          }
        }
      }
      break;
    }
    case LayerKind::pool: {
      if (!need_gx) break;
      const std::size_t win = s.window;
      for (std::size_t c = 0; c < out.channels; ++c) {
        for (std::size_t oy = 0; oy < out.height; ++oy) {
          for (std::size_t ox = 0; ox < out.width; ++ox) {
            const double go = g[(c * out.height + oy) * out.width + ox];
            if (go == 0.0) continue;
            if (s.pool == PoolMode::sum) {
              for (std::size_t dy = 0; dy < win; ++dy) {
                for (std::size_t dx = 0; dx < win; ++dx) {
                  gx[(c * in.height + oy * win + dy) * in.width + ox * win + dx] += go;
                }
              }
            } else {
              std::size_t best = 0;
              double best_v = -INFINITY;
              for (std::size_t dy = 0; dy < win; ++dy) {
                for (std::size_t dx = 0; dx < win; ++dx) {
                  const std::size_t xi = (c * in.height + oy * win + dy) * in.width + ox * win + dx;
                  if (x[xi] > best_v) {
                    best_v = x[xi];
                    best = xi;
                  }
                }
              }
              gx[best] += go;
            }
          }
        }
      }
      break;
    }
    case LayerKind::fc: {
      const double* w = params.data() + arch.weight_offset(l);
      double* gw = grads.data() + arch.weight_offset(l);
      double* gb = grads.data() + arch.bias_offset(l);
      bool any = false;
      for (std::size_t o = 0; o < s.out; ++o) {
        gb[o] += g[o];
        any = any || g[o] != 0.0;
      }
      if (!any) break;
      for (std::size_t i = 0; i < s.in; ++i) {
        const double* row = w + i * s.out;
        if (x[i] != 0.0) {
          double* grow = gw + i * s.out;
          for (std::size_t o = 0; o < s.out; ++o) grow[o] += x[i] * g[o];
        }
        if (need_gx) {
          double acc = 0.0;
          for (std::size_t o = 0; o < s.out; ++o) acc += row[o] * g[o];
          gx[i] = acc;
        }
      }
      break;
    }
  }
}

}  // namespace detail

/// Runs the layer stack for K steps, feeding plane k at step k; s_dg[c] is
/// the output layer's spike count for class c divided by K.
inline SnnOutput snn_forward(const RealPlanes& planes, std::span<const double> params,
                             const SnnArchitecture& arch, const LifConfig& cfg, bool record = false,
                             SpikeFn fn = SpikeFn::hard, const Surrogate& surrogate = {}) {
  detail::check_params(params, arch);
  if (planes.plane_size() != arch.input().size() || planes.geometry.height != arch.input().height ||
      planes.geometry.width != arch.input().width || arch.input().channels != 2) {
    throw Error(ErrorKind::ShapeMismatch, "planes do not match the architecture input");
  }
  if (planes.k == 0) throw Error(ErrorKind::BadK, "no planes to run");
  const std::size_t steps = planes.k;
  const std::size_t depth = arch.depth();

  SnnOutput result;
  result.s_dg.assign(arch.num_classes(), 0.0);
  SnnRecording& rec = result.recording;
  if (record) {
    rec.steps = steps;
    rec.fn = fn;
    rec.input = planes.values;
    rec.potential.resize(depth);
    rec.spikes.resize(depth);
    for (std::size_t l = 0; l < depth; ++l) {
      rec.potential[l].resize(steps * arch.out_shape(l).size());
      rec.spikes[l].resize(steps * arch.out_shape(l).size());
    }
  }

  std::vector<std::vector<double>> membrane(depth);
  std::vector<std::vector<double>> spikes(depth);
  std::vector<std::vector<double>> current(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    membrane[l].assign(arch.out_shape(l).size(), 0.0);
    spikes[l].assign(arch.out_shape(l).size(), 0.0);
    current[l].assign(arch.out_shape(l).size(), 0.0);
  }

  for (std::size_t k = 0; k < steps; ++k) {
    std::span<const double> x = planes.plane(k);
    for (std::size_t l = 0; l < depth; ++l) {
      detail::layer_current(arch, l, params, x, current[l]);
      const std::size_t n = current[l].size();
      for (std::size_t j = 0; j < n; ++j) {
        const double v = cfg.beta * membrane[l][j] + current[l][j];
        const double s = detail::fire(v, cfg, fn, surrogate);
        spikes[l][j] = s;
        membrane[l][j] = detail::after_reset(v, s, cfg);
        if (record) {
          rec.potential[l][k * n + j] = v;
          rec.spikes[l][k * n + j] = s;
        }
      }
      x = spikes[l];
    }
    const auto& out = spikes[depth - 1];
    for (std::size_t c = 0; c < out.size(); ++c) result.s_dg[c] += out[c];
  }
  for (double& v : result.s_dg) v /= static_cast<double>(steps);
  return result;
}

/// Backpropagation through time from d loss / d s_dg to all parameters.
inline void snn_backward_accumulate(const SnnRecording& rec, std::span<const double> grad_sdg,
                                    std::span<const double> params, const SnnArchitecture& arch,
                                    const LifConfig& cfg, const Surrogate& surrogate,
                                    std::span<double> grads) {
  if (rec.empty()) throw Error(ErrorKind::NoRecordedForward, "snn_backward needs a recorded forward pass");
  detail::check_params(params, arch);
  if (grads.size() != arch.param_count() || grad_sdg.size() != arch.num_classes()) {
    throw Error(ErrorKind::ShapeMismatch, "snn_backward: gradient buffer sizes");
  }
  const std::size_t depth = arch.depth();
  const std::size_t steps = rec.steps;

  std::vector<std::vector<double>> carry(depth);  // d loss / d v_post from step k+1
  for (std::size_t l = 0; l < depth; ++l) carry[l].assign(arch.out_shape(l).size(), 0.0);
  std::vector<double> g_s;
  std::vector<double> g_v;
  std::vector<double> g_x;

  for (std::size_t kk = steps; kk-- > 0;) {
    g_s.assign(grad_sdg.begin(), grad_sdg.end());
    for (double& v : g_s) v /= static_cast<double>(steps);
    for (std::size_t l = depth; l-- > 0;) {
      const std::size_t n = arch.out_shape(l).size();
      const double* v = rec.potential[l].data() + kk * n;
      const double* s = rec.spikes[l].data() + kk * n;
      g_v.assign(n, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const double sp = surrogate.derivative(v[j], cfg.theta);
        double dpost = 0.0;
        if (cfg.reset == ResetMode::to_zero) {
          dpost = 1.0 - s[j];
          if (!surrogate.detach_reset) dpost -= v[j] * sp;
        } else {
          dpost = 1.0;
          if (!surrogate.detach_reset) dpost -= cfg.theta * sp;
        }
        g_v[j] = g_s[j] * sp + carry[l][j] * dpost;
        carry[l][j] = cfg.beta * g_v[j];
      }
      std::span<const double> x;
      if (l == 0) {
        x = std::span<const double>(rec.input).subspan(kk * arch.input().size(), arch.input().size());
        g_x.clear();
      } else {
        const std::size_t m = arch.out_shape(l - 1).size();
        x = std::span<const double>(rec.spikes[l - 1]).subspan(kk * m, m);
        g_x.assign(m, 0.0);
      }
      detail::layer_backward(arch, l, params, x, g_v, grads, g_x);
      g_s.swap(g_x);
    }
  }
}

inline std::vector<double> snn_backward(const SnnRecording& rec, std::span<const double> grad_sdg,
                                        std::span<const double> params, const SnnArchitecture& arch,
                                        const LifConfig& cfg, const Surrogate& surrogate = {}) {
  std::vector<double> grads(arch.param_count(), 0.0);
  snn_backward_accumulate(rec, grad_sdg, params, arch, cfg, surrogate, grads);
  return grads;
}

struct SnnBatchGradients {
  double loss = 0.0;            // mean MSE over the batch
  std::vector<double> grads;    // gradient of the mean loss
};

/// MSE-loss gradients averaged over a batch of (planes, target) pairs.
inline SnnBatchGradients snn_mse_gradients(std::span<const RealPlanes> batch,
                                           std::span<const std::size_t> targets,
                                           std::span<const double> params,
                                           const SnnArchitecture& arch, const LifConfig& cfg,
                                           const Surrogate& surrogate = {},
                                           SpikeFn fn = SpikeFn::hard) {
  if (batch.size() != targets.size()) throw Error(ErrorKind::ShapeMismatch, "batch/target size");
  SnnBatchGradients r{0.0, std::vector<double>(arch.param_count(), 0.0)};
  if (batch.empty()) return r;
  const std::size_t classes = arch.num_classes();
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto out = snn_forward(batch[i], params, arch, cfg, true, fn, surrogate);
    r.loss += scale * mse_spike_loss(out.s_dg, targets[i], classes);
    auto g = mse_spike_loss_grad(out.s_dg, targets[i], classes);
    for (double& v : g) v *= scale;
    snn_backward_accumulate(out.recording, g, params, arch, cfg, surrogate, r.grads);
  }
  return r;
}

}  // namespace gestemo

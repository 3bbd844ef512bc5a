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

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gestemo/config.hpp"
#include "gestemo/error.hpp"
#include "gestemo/model.hpp"

// Checkpoint container: one line of JSON (architecture, configuration,
// seed, block sizes) terminated by '\n', followed by param_count IEEE-754
// doubles in little-endian byte order.

namespace gestemo {

inline constexpr std::string_view kCheckpointFormat = "gestemo-checkpoint";

inline nlohmann::json layer_to_json(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::conv:
      return {{"type", "conv"}, {"in", s.in}, {"out", s.out}, {"kernel", s.kernel},
              {"stride", s.stride}, {"padding", s.padding}};
    case LayerKind::pool:
      return {{"type", "pool"}, {"window", s.window}, {"mode", s.pool == PoolMode::sum ? "sum" : "max"}};
    case LayerKind::fc:
      return {{"type", "fc"}, {"in", s.in}, {"out", s.out}};
  }
  return {};
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "conv") {
    return LayerSpec::conv(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                           j.at("kernel").get<std::size_t>(), j.value("stride", std::size_t{1}),
                           j.value("padding", std::size_t{0}));
  }
  if (type == "pool") {
    const auto mode = j.value("mode", std::string("sum"));
    return LayerSpec::pooling(j.at("window").get<std::size_t>(), mode == "max" ? PoolMode::max : PoolMode::sum);
  }
  if (type == "fc") return LayerSpec::fc(j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>());
  throw Error(ErrorKind::BadCheckpoint, "unknown layer type '" + type + "'");
}

inline nlohmann::json checkpoint_header(const Model& m) {
  nlohmann::json h;
  h["format"] = std::string(kCheckpointFormat);
  h["version"] = 1;
  h["seed"] = m.config.seed;
  h["config"] = to_json(m.config);
  h["classes"] = m.class_names;
  h["geometry"] = {m.geometry.width, m.geometry.height};
  h["feature_dim"] = m.feature_dim;
  if (m.snn) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.snn->layers()) layers.push_back(layer_to_json(l));
    const auto& in = m.snn->input();
    h["snn"] = {{"input", {in.channels, in.height, in.width}}, {"layers", layers}};
  } else {
    h["snn"] = nullptr;
  }
  h["recurrent"] = m.recurrent ? nlohmann::json{{"input", m.recurrent->input}, {"hidden", m.recurrent->hidden}}
                               : nlohmann::json(nullptr);
  h["head"] = m.head ? nlohmann::json{{"input", m.head->input}, {"hidden", m.head->hidden},
                                      {"classes", m.head->classes}}
                     : nlohmann::json(nullptr);
  h["fusion"] = {{"lambda", m.config.lambda}};
  h["blocks"] = {{"snn", m.snn_size()}, {"recurrent", m.recurrent_size()}, {"head", m.head_size()}};
  h["param_count"] = m.param_count();
  return h;
}

inline void write_checkpoint(std::ostream& out, const Model& m) {
  if (m.params.size() != m.param_count()) throw Error(ErrorKind::BadCheckpoint, "parameter block size mismatch");
  out << checkpoint_header(m).dump() << '\n';
  std::vector<char> bytes(m.params.size() * 8);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(m.params[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void save_checkpoint(const Model& m, const fs::path& path) {
  auto out = detail::open_output(path);
  write_checkpoint(out, m);
  if (!out.flush()) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

inline Model read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::BadCheckpoint, "missing header");
  Model m;
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("format").get<std::string>() != kCheckpointFormat) {
      throw Error(ErrorKind::BadCheckpoint, "not a checkpoint file");
    }
    m.config = config_from_json(h.at("config"));
    m.class_names = h.at("classes").get<std::vector<std::string>>();
    m.geometry = Geometry{h.at("geometry").at(0).get<std::uint32_t>(), h.at("geometry").at(1).get<std::uint32_t>()};
    m.feature_dim = h.at("feature_dim").get<std::size_t>();
    if (!h.at("snn").is_null()) {
      const auto& s = h.at("snn");
      const TensorShape in{s.at("input").at(0).get<std::size_t>(), s.at("input").at(1).get<std::size_t>(),
                           s.at("input").at(2).get<std::size_t>()};
      std::vector<LayerSpec> layers;
      for (const auto& l : s.at("layers")) layers.push_back(layer_from_json(l));
      m.snn = SnnArchitecture(in, std::move(layers));
    }
    if (!h.at("recurrent").is_null()) {
      m.recurrent = RecurrentDims{h["recurrent"].at("input").get<std::size_t>(),
                                  h["recurrent"].at("hidden").get<std::size_t>()};
    }
    if (!h.at("head").is_null()) {
      m.head = HeadDims{h["head"].at("input").get<std::size_t>(), h["head"].at("hidden").get<std::size_t>(),
                        h["head"].at("classes").get<std::size_t>()};
    }
    const auto count = h.at("param_count").get<std::size_t>();
    if (count != m.param_count()) throw Error(ErrorKind::BadCheckpoint, "param_count disagrees with architecture");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::BadCheckpoint, std::string("header: ") + ex.what());
  }
  std::vector<char> bytes(m.param_count() * 8);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorKind::BadCheckpoint, "truncated parameter block");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorKind::BadCheckpoint, "trailing bytes");
  m.params.resize(m.param_count());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= std::uint64_t{static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])} << (8 * b);
    }
    m.params[i] = std::bit_cast<double>(bits);
  }
  return m;
}

inline Model load_checkpoint(const fs::path& path) {
  auto in = detail::open_input(path);
  return read_checkpoint(in);
}

}  // namespace gestemo

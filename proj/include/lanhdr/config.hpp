/*
 * Copyright 2026 The lanhdr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanhdr/datapipe.hpp"
#include "lanhdr/error.hpp"
#include "lanhdr/losses.hpp"
#include "lanhdr/model_config.hpp"

namespace lanhdr {

struct DataConfig {
  std::string manifest;
  int crop = 256;
  int batch_size = 8;
  bool augment = true;
  double min_gain = 0.8;
};

/// AdamW with decoupled weight decay.
struct OptimConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  int64_t max_steps = 100000;
  int64_t checkpoint_every = 1000;
  int64_t log_every = 10;
};

struct LossConfig {
  LossWeights weights;
  double mu = kDefaultMu;
  std::string vgg_weights = "weights/vgg19_features.pt";
};

struct InferConfig {
  int tile = 0;  // 0 runs whole frames
  int tile_overlap = 32;
};

struct RunConfig {
  ModelConfig model;
  DataConfig data;
  OptimConfig optim;
  LossConfig loss;
  InferConfig infer;
  uint64_t seed = 0;
  bool deterministic = true;
  std::string output_dir = "runs/default";

  nlohmann::json json;  // validated, fully populated source of the fields above
};

namespace detail {

inline const nlohmann::json& default_config_json() {
  static const nlohmann::json j = nlohmann::json::parse(R"({
    "model": {
      "exposure_count": 2, "kq_channels": 64, "value_channels": 64,
      "feature_channels": 64, "merge_channels": 64, "merge_blocks": 5,
      "gamma": 2.2, "attention_tile": 1024
    },
    "data": {"manifest": "", "crop": 256, "batch_size": 8, "augment": true, "min_gain": 0.8},
    "optim": {
      "lr": 1e-4, "beta1": 0.9, "beta2": 0.999, "weight_decay": 0.01,
      "max_steps": 100000, "checkpoint_every": 1000, "log_every": 10
    },
    "loss": {
      "l1": 1.0, "perceptual": 0.1, "frequency": 0.1, "temporal": 0.1,
      "epsilon": 1e-3, "mu": 5000.0, "vgg_weights": "weights/vgg19_features.pt"
    },
    "infer": {"tile": 0, "tile_overlap": 32},
    "seed": 0,
    "deterministic": true,
    "output_dir": "runs/default"
  })");
  return j;
}

inline bool same_kind(const nlohmann::json& expected, const nlohmann::json& got) {
  if (expected.is_number_integer()) return got.is_number_integer();
  if (expected.is_number()) return got.is_number();
  return expected.type() == got.type();
}

/// Overlays `user` onto `base`, rejecting unknown keys and type mismatches.
inline void overlay(nlohmann::json& base, const nlohmann::json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config: '" + path + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const auto where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("config: unknown key '" + where + "'");
    auto& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, where);
    } else if (!same_kind(slot, value)) {
      throw ConfigError("config: '" + where + "' expects " + std::string(slot.type_name()) +
                        ", got " + value.type_name());
    } else {
      slot = value;
    }
  }
}

inline RunConfig extract(const nlohmann::json& j) {
  RunConfig c;
  const auto& m = j.at("model");
  c.model.exposure_count = m.at("exposure_count");
  c.model.kq_channels = m.at("kq_channels");
  c.model.value_channels = m.at("value_channels");
  c.model.feature_channels = m.at("feature_channels");
  c.model.merge_channels = m.at("merge_channels");
  c.model.merge_blocks = m.at("merge_blocks");
  c.model.gamma = m.at("gamma");
  c.model.attention_tile = m.at("attention_tile");
  const auto& d = j.at("data");
  c.data.manifest = d.at("manifest");
  c.data.crop = d.at("crop");
  c.data.batch_size = d.at("batch_size");
  c.data.augment = d.at("augment");
  c.data.min_gain = d.at("min_gain");
  const auto& o = j.at("optim");
  c.optim.lr = o.at("lr");
  c.optim.beta1 = o.at("beta1");
  c.optim.beta2 = o.at("beta2");
  c.optim.weight_decay = o.at("weight_decay");
  c.optim.max_steps = o.at("max_steps");
  c.optim.checkpoint_every = o.at("checkpoint_every");
  c.optim.log_every = o.at("log_every");
  const auto& l = j.at("loss");
  c.loss.weights.l1 = l.at("l1");
  c.loss.weights.perceptual = l.at("perceptual");
  c.loss.weights.frequency = l.at("frequency");
  c.loss.weights.temporal = l.at("temporal");
  c.loss.weights.epsilon = l.at("epsilon");
  c.loss.mu = l.at("mu");
  c.loss.vgg_weights = l.at("vgg_weights");
  c.infer.tile = j.at("infer").at("tile");
  c.infer.tile_overlap = j.at("infer").at("tile_overlap");
  c.seed = j.at("seed");
  c.deterministic = j.at("deterministic");
  c.output_dir = j.at("output_dir");
  c.json = j;
  return c;
}

inline void validate(const RunConfig& c) {
  c.model.validate();
  c.loss.weights.validate();
  if (!(c.loss.mu > 0)) throw ConfigError("loss.mu must be positive");
  if (!(c.optim.lr > 0)) throw ConfigError("optim.lr must be positive");
  if (!(c.optim.beta1 >= 0 && c.optim.beta1 < 1 && c.optim.beta2 >= 0 && c.optim.beta2 < 1)) {
    throw ConfigError("optim betas must lie in [0,1)");
  }
  if (c.optim.weight_decay < 0) throw ConfigError("optim.weight_decay must be non-negative");
  if (c.optim.max_steps < 0) throw ConfigError("optim.max_steps must be non-negative");
  if (c.optim.checkpoint_every <= 0 || c.optim.log_every <= 0) {
    throw ConfigError("optim.checkpoint_every and optim.log_every must be positive");
  }
  if (c.data.crop <= 0 || c.data.crop % 4 != 0) {
    throw ConfigError("data.crop must be a positive multiple of 4");
  }
  if (c.data.batch_size <= 0) throw ConfigError("data.batch_size must be positive");
  if (!(c.data.min_gain > 0 && c.data.min_gain <= 1)) {
    throw ConfigError("data.min_gain must lie in (0,1]");
  }
  if (c.infer.tile < 0 || c.infer.tile % 4 != 0) {
    throw ConfigError("infer.tile must be 0 or a positive multiple of 4");
  }
  if (c.infer.tile > 0 && (c.infer.tile_overlap < 0 || 2 * c.infer.tile_overlap >= c.infer.tile)) {
    throw ConfigError("infer.tile_overlap must be non-negative and less than half the tile");
  }
}

/// Parses a `--set` value: JSON literal when it parses, bare string otherwise.
inline nlohmann::json parse_override_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    return nlohmann::json(text);
  }
}

}  // namespace detail

/// Builds a validated config from a JSON document plus `key.path=value` overrides.
inline RunConfig make_config(const nlohmann::json& user = nlohmann::json::object(),
                             const std::vector<std::string>& overrides = {}) {
  nlohmann::json j = detail::default_config_json();
  if (!user.is_null()) detail::overlay(j, user, "");
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("--set expects key=value, got '" + item + "'");
    }
    const auto key = item.substr(0, eq);
    nlohmann::json patch = detail::parse_override_value(item.substr(eq + 1));
    // Build {"a":{"b":value}} from "a.b".
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
      parts.push_back(key.substr(start, dot - start));
    }
    parts.push_back(key.substr(start));
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      nlohmann::json wrapped;
      wrapped[*it] = std::move(patch);
      patch = std::move(wrapped);
    }
    detail::overlay(j, patch, "");
  }
  auto c = detail::extract(j);
  detail::validate(c);
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  nlohmann::json user;
  try {
    in >> user;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return make_config(user, overrides);
}

/// Stable 64-bit FNV-1a hash of the model section, as 16 hex digits. Checkpoints record it so
/// weights are never loaded into a differently shaped network.
inline std::string model_config_hash(const RunConfig& c) {
  auto model = c.json.at("model");
  model.erase("attention_tile");  // execution detail, does not change parameters
  const auto text = model.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lanhdr

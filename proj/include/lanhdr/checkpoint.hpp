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

#include <torch/torch.h>

#include <filesystem>
#include <optional>
#include <string>

#include "lanhdr/error.hpp"
#include "lanhdr/fusion.hpp"

namespace lanhdr {

struct CheckpointInfo {
  int64_t step = 0;
  std::string config_hash;
  bool has_optimizer = false;
};

/// Writes one archive holding the parameter groups (alignment, hallucination, blend, merge),
/// the model config hash, the step counter and optionally the optimizer state. The file is
/// written beside the target and renamed into place.
inline void save_checkpoint(const std::filesystem::path& path, LanHdrNet& net, int64_t step,
                            const std::string& config_hash,
                            torch::optim::Optimizer* optimizer = nullptr) {
  torch::serialize::OutputArchive archive;
  torch::serialize::OutputArchive params;
  net->save(params);
  archive.write("model", params);
  archive.write("step", c10::IValue(step));
  archive.write("config_hash", c10::IValue(config_hash));
  archive.write("has_optimizer", c10::IValue(optimizer != nullptr));
  if (optimizer) {
    torch::serialize::OutputArchive opt;
    optimizer->save(opt);
    archive.write("optimizer", opt);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  try {
    archive.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw DataError("cannot write checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
  std::filesystem::rename(tmp, path);
}

/// Reads only the metadata of a checkpoint.
inline CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DataError("checkpoint not found: '" + path.string() + "'");
  }
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    c10::IValue step, hash, has_opt;
    archive.read("step", step);
    archive.read("config_hash", hash);
    archive.read("has_optimizer", has_opt);
    return CheckpointInfo{step.toInt(), hash.toStringRef(), has_opt.toBool()};
  } catch (const c10::Error& e) {
    throw DataError("cannot read checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
}

/// Restores parameters (and optimizer state when given). Refuses a checkpoint whose model
/// config hash differs from `expected_hash`.
inline CheckpointInfo load_checkpoint(const std::filesystem::path& path, LanHdrNet& net,
                                      const std::string& expected_hash,
                                      torch::optim::Optimizer* optimizer = nullptr) {
  const auto info = read_checkpoint_info(path);
  if (info.config_hash != expected_hash) {
    throw ConfigError("checkpoint '" + path.string() + "' was written for model config " +
                      info.config_hash + ", current model config is " + expected_hash);
  }
  try {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    torch::serialize::InputArchive params;
    archive.read("model", params);
    net->load(params);
    if (optimizer && info.has_optimizer) {
      torch::serialize::InputArchive opt;
      archive.read("optimizer", opt);
      optimizer->load(opt);
    }
  } catch (const c10::Error& e) {
    throw DataError("cannot load checkpoint '" + path.string() + "': " + e.what_without_backtrace());
  }
  return info;
}

}  // namespace lanhdr

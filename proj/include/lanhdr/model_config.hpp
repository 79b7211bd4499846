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

#include "lanhdr/error.hpp"

namespace lanhdr {

/// Architecture hyperparameters. Widths are free choices; the merge block count is fixed at 5
/// by default and exposed only so tests can shrink the network.
struct ModelConfig {
  int exposure_count = 2;     // 2 -> 5-frame windows, 3 -> 7-frame windows
  int kq_channels = 64;       // key/query extractor width
  int value_channels = 64;    // value extractor width
  int feature_channels = 64;  // F_a / F_h / per-LAN output width
  int merge_channels = 64;
  int merge_blocks = 5;
  double gamma = 2.2;
  int64_t attention_tile = 1024;  // query rows per similarity tile

  /// Number of neighbors on each side of the reference.
  int half_window() const { return exposure_count == 3 ? 3 : 2; }
  int window_size() const { return 2 * half_window() + 1; }

  void validate() const {
    if (exposure_count != 2 && exposure_count != 3) {
      throw ConfigError("model.exposure_count must be 2 or 3");
    }
    if (kq_channels <= 0 || value_channels <= 0 || feature_channels <= 0 || merge_channels <= 0) {
      throw ConfigError("model channel widths must be positive");
    }
    if (merge_blocks < 0) throw ConfigError("model.merge_blocks must be non-negative");
    if (!(gamma > 0.0)) throw ConfigError("model.gamma must be positive");
    if (attention_tile <= 0) throw ConfigError("model.attention_tile must be positive");
  }
};

}  // namespace lanhdr

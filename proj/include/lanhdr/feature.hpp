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

#include <sstream>
#include <string>

#include "lanhdr/error.hpp"

namespace lanhdr {

namespace F = torch::nn::functional;

/// Resolution of a feature map relative to the full-resolution window.
enum class Scale { kFull = 1, kHalf = 2, kQuarter = 4 };

inline int scale_factor(Scale s) { return static_cast<int>(s); }

inline const char* to_string(Scale s) {
  switch (s) {
    case Scale::kFull:
      return "full";
    case Scale::kHalf:
      return "half";
    case Scale::kQuarter:
      return "quarter";
  }
  return "?";
}

/// Batched real-valued feature tensor [B,C,h,w] tagged with its scale.
struct FeatureMap {
  torch::Tensor data;
  Scale scale = Scale::kFull;

  int64_t batch() const { return data.size(0); }
  int64_t channels() const { return data.size(1); }
  int64_t height() const { return data.size(2); }
  int64_t width() const { return data.size(3); }
};

inline std::string shape_string(const torch::Tensor& t) {
  std::ostringstream os;
  os << t.sizes();
  return os.str();
}

namespace detail {

inline void require_rank(const torch::Tensor& t, int64_t rank, const char* what) {
  if (!t.defined() || t.dim() != rank) {
    throw ContractViolation(std::string(what) + ": expected rank " + std::to_string(rank) +
                            " tensor, got " + (t.defined() ? shape_string(t) : "undefined"));
  }
}

inline void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.defined() || !b.defined() || a.sizes() != b.sizes()) {
    throw ContractViolation(std::string(what) + ": shape mismatch " +
                            (a.defined() ? shape_string(a) : "undefined") + " vs " +
                            (b.defined() ? shape_string(b) : "undefined"));
  }
}

inline void require_scale(const FeatureMap& f, Scale expected, const char* what) {
  if (f.scale != expected) {
    throw ContractViolation(std::string(what) + ": expected " + to_string(expected) +
                            " scale input, got " + to_string(f.scale));
  }
}

/// Adds a leading batch dimension to [C,H,W] tensors; leaves [B,C,H,W] alone.
inline torch::Tensor as_batched(const torch::Tensor& t) {
  if (t.dim() == 3) return t.unsqueeze(0);
  require_rank(t, 4, "as_batched");
  return t;
}

}  // namespace detail
}  // namespace lanhdr

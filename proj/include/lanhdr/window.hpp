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

#include <string>
#include <vector>

#include "lanhdr/error.hpp"
#include "lanhdr/radiometry.hpp"

namespace lanhdr {

/// 2N+1 consecutive LDR frames centred on the reference, with their linear companions.
struct FrameWindow {
  std::vector<ExposureFrame> frames;
  std::vector<LinearFrame> linear;
  int reference_index = 0;
  torch::Tensor ground_truth;  // optional [3,H,W] linear HDR target for frame t

  /// Builds the linear companions with ldr_to_linear. The reference is the centre frame.
  static FrameWindow from_frames(std::vector<ExposureFrame> frames,
                                 torch::Tensor ground_truth = {}) {
    FrameWindow w;
    w.reference_index = static_cast<int>(frames.size() / 2);
    w.linear.reserve(frames.size());
    for (const auto& f : frames) w.linear.push_back(ldr_to_linear(f));
    w.frames = std::move(frames);
    w.ground_truth = std::move(ground_truth);
    return w;
  }

  int size() const { return static_cast<int>(frames.size()); }
  const ExposureFrame& reference() const { return frames.at(reference_index); }
  int64_t height() const { return frames.front().pixels.size(-2); }
  int64_t width() const { return frames.front().pixels.size(-1); }

  /// [B,6,H,W] = concat(L_i, X_i) along channels.
  torch::Tensor six_channel(int i) const {
    const auto& l = frames.at(i).pixels;
    const auto& x = linear.at(i).pixels;
    return torch::cat({l.dim() == 3 ? l.unsqueeze(0) : l, x.dim() == 3 ? x.unsqueeze(0) : x}, 1);
  }

  std::vector<double> exposure_times() const {
    std::vector<double> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(f.exposure_time);
    return out;
  }

  /// Checks size, centring, shared geometry and exposure alternation.
  void validate(int expected_size) const {
    if (size() != expected_size) {
      throw ContractViolation("FrameWindow: expected " + std::to_string(expected_size) +
                              " frames, got " + std::to_string(size()));
    }
    if (linear.size() != frames.size()) {
      throw ContractViolation("FrameWindow: linear companions missing");
    }
    if (reference_index != size() / 2) {
      throw ContractViolation("FrameWindow: reference must be the centre frame");
    }
    const auto shape = frames.front().pixels.sizes();
    for (int i = 0; i < size(); ++i) {
      if (frames[i].pixels.sizes() != shape || linear[i].pixels.sizes() != shape) {
        throw ContractViolation("FrameWindow: frames differ in shape");
      }
      if (i > 0 && frames[i].exposure_time == frames[i - 1].exposure_time) {
        throw ContractViolation("FrameWindow: consecutive frames share an exposure time");
      }
    }
  }
};

}  // namespace lanhdr

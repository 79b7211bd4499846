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

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"

namespace lanhdr {

inline constexpr double kDefaultGamma = 2.2;
inline constexpr double kDefaultMu = 5000.0;
inline constexpr double kPuPeakLuminance = 4000.0;

/// BT.601 full-range luma weights.
inline constexpr std::array<double, 3> kLumaWeights{0.299, 0.587, 0.114};

/// An LDR frame with values in [0,1], tagged with exposure time and gamma.
/// `pixels` is [3,H,W] or batched [B,3,H,W].
struct ExposureFrame {
  torch::Tensor pixels;
  double exposure_time = 1.0;
  double gamma = kDefaultGamma;

  void validate() const {
    if (!pixels.defined() || (pixels.dim() != 3 && pixels.dim() != 4) ||
        pixels.size(-3) != 3) {
      throw InvalidInputError("ExposureFrame: pixels must be [3,H,W] or [B,3,H,W], got " +
                              (pixels.defined() ? shape_string(pixels) : "undefined"));
    }
    if (!(exposure_time > 0.0) || !std::isfinite(exposure_time)) {
      throw InvalidInputError("ExposureFrame: exposure time must be positive, got " +
                              std::to_string(exposure_time));
    }
    if (!(gamma > 0.0)) throw InvalidInputError("ExposureFrame: gamma must be positive");
    auto p = pixels.detach();
    if (!torch::isfinite(p).all().item<bool>()) {
      throw InvalidInputError("ExposureFrame: non-finite pixel values");
    }
    if (p.numel() > 0 && (p.min().item<double>() < 0.0 || p.max().item<double>() > 1.0)) {
      throw InvalidInputError("ExposureFrame: pixel values outside [0,1]");
    }
  }
};

/// Non-negative linear radiance, same layout as ExposureFrame::pixels.
struct LinearFrame {
  torch::Tensor pixels;
};

struct TonemapParams {
  double mu = kDefaultMu;
};

/// X = L^gamma / e.
inline LinearFrame ldr_to_linear(const ExposureFrame& frame) {
  frame.validate();
  return LinearFrame{frame.pixels.pow(frame.gamma) / frame.exposure_time};
}

/// Re-exposes an LDR frame to `target_exposure`: clip(L * (e'/e)^(1/gamma)).
inline ExposureFrame adjust_exposure(const ExposureFrame& ref, double target_exposure) {
  if (!(target_exposure > 0.0) || !std::isfinite(target_exposure)) {
    throw InvalidInputError("adjust_exposure: target exposure must be positive, got " +
                            std::to_string(target_exposure));
  }
  if (!(ref.exposure_time > 0.0)) {
    throw InvalidInputError("adjust_exposure: reference exposure must be positive");
  }
  const double gain = std::pow(target_exposure / ref.exposure_time, 1.0 / ref.gamma);
  return ExposureFrame{torch::clamp(ref.pixels * gain, 0.0, 1.0), target_exposure, ref.gamma};
}

/// Luma (Y of YCbCr) over the channel axis; [...,3,H,W] -> [...,1,H,W].
inline torch::Tensor rgb_to_luma(const torch::Tensor& pixels) {
  if (!pixels.defined() || pixels.dim() < 3 || pixels.size(-3) != 3) {
    throw ContractViolation("rgb_to_luma: expected [...,3,H,W], got " +
                            (pixels.defined() ? shape_string(pixels) : "undefined"));
  }
  const auto r = pixels.narrow(-3, 0, 1);
  const auto g = pixels.narrow(-3, 1, 1);
  const auto b = pixels.narrow(-3, 2, 1);
  return r * kLumaWeights[0] + g * kLumaWeights[1] + b * kLumaWeights[2];
}

/// log(1 + mu*H) / log(1 + mu).
inline torch::Tensor mu_law(const torch::Tensor& hdr, const TonemapParams& params = {}) {
  if (!(params.mu > 0.0)) throw InvalidInputError("mu_law: mu must be positive");
  if (hdr.numel() > 0 && hdr.detach().min().item<double>() < 0.0) {
    throw InvalidInputError("mu_law: negative input");
  }
  return torch::log1p(hdr * params.mu) / std::log1p(params.mu);
}

/// PU21 transfer function, banding+glare fit.
namespace pu21 {

inline constexpr std::array<double, 7> kBandingGlare{
    0.353487901, 0.3734658629, 8.277049286e-05, 0.9062562627,
    0.09150303166, 0.9099517204, 596.3148142};
inline constexpr double kMinLuminance = 0.005;
inline constexpr double kMaxLuminance = 10000.0;

/// Encodes absolute luminance in cd/m^2 (clamped to the fit's valid range).
inline torch::Tensor encode(const torch::Tensor& luminance) {
  const auto& p = kBandingGlare;
  auto y = torch::clamp(luminance, kMinLuminance, kMaxLuminance);
  auto yp = y.pow(p[3]);
  auto v = p[6] * (((p[0] + p[1] * yp) / (1.0 + p[2] * yp)).pow(p[4]) - p[5]);
  return torch::clamp_min(v, 0.0);
}

inline double encode(double luminance) {
  const auto& p = kBandingGlare;
  const double y = std::clamp(luminance, kMinLuminance, kMaxLuminance);
  const double yp = std::pow(y, p[3]);
  return std::max(p[6] * (std::pow((p[0] + p[1] * yp) / (1.0 + p[2] * yp), p[4]) - p[5]), 0.0);
}

}  // namespace pu21

/// PU21-encodes `radiance` after scaling `frame_peak` to `peak_luminance` cd/m^2.
/// Use this form to share one normalization between a prediction and its reference.
inline torch::Tensor pu_encode_with_peak(const torch::Tensor& radiance, double frame_peak,
                                         double peak_luminance = kPuPeakLuminance) {
  if (!(frame_peak > 0.0) || !std::isfinite(frame_peak)) {
    throw DegenerateInputError("pu_encode: frame peak must be positive, got " +
                               std::to_string(frame_peak));
  }
  if (radiance.numel() > 0 && radiance.detach().min().item<double>() < 0.0) {
    throw InvalidInputError("pu_encode: negative radiance");
  }
  return pu21::encode(radiance * (peak_luminance / frame_peak));
}

/// Scales the frame so its own peak maps to `peak_luminance` cd/m^2, then PU21-encodes it.
inline torch::Tensor pu_encode(const torch::Tensor& radiance,
                               double peak_luminance = kPuPeakLuminance) {
  if (radiance.numel() == 0) throw DegenerateInputError("pu_encode: empty frame");
  const double peak = radiance.detach().max().item<double>();
  if (!(peak > 0.0)) {
    throw DegenerateInputError("pu_encode: all-zero frame has no peak to normalize");
  }
  return pu_encode_with_peak(radiance, peak, peak_luminance);
}

}  // namespace lanhdr

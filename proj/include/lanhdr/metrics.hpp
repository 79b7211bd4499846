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

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"
#include "lanhdr/radiometry.hpp"

namespace lanhdr {

/// PSNR in dB; identical inputs are reported through `infinite`, never a sentinel value.
struct PsnrValue {
  double db = 0.0;
  bool infinite = false;
};

inline PsnrValue psnr(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0) {
  detail::require_same_shape(a, b, "psnr");
  const double mse = (a.to(torch::kDouble) - b.to(torch::kDouble)).square().mean().item<double>();
  if (mse == 0.0) return PsnrValue{0.0, true};
  return PsnrValue{10.0 * std::log10(peak * peak / mse), false};
}

namespace detail {

inline torch::Tensor gaussian_window(int64_t size, double sigma) {
  auto x = torch::arange(size, torch::kDouble) - static_cast<double>(size - 1) / 2.0;
  auto g = torch::exp(-x.square() / (2.0 * sigma * sigma));
  g = g / g.sum();
  return g.unsqueeze(1) * g.unsqueeze(0);
}

}  // namespace detail

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03, evaluated over
/// valid window positions and averaged over channels. Frames smaller than 11 pixels use the
/// largest odd window that fits.
inline double ssim(const torch::Tensor& a, const torch::Tensor& b, double data_range = 1.0) {
  detail::require_same_shape(a, b, "ssim");
  auto x = detail::as_batched(a).to(torch::kDouble);
  auto y = detail::as_batched(b).to(torch::kDouble);
  const int64_t c = x.size(1);
  int64_t win = std::min<int64_t>({11, x.size(2), x.size(3)});
  if (win % 2 == 0) --win;
  const auto kernel = detail::gaussian_window(win, 1.5).expand({c, 1, win, win}).contiguous();
  const auto filt = [&](const torch::Tensor& t) {
    return F::conv2d(t, kernel, F::Conv2dFuncOptions().groups(c));
  };
  const double c1 = std::pow(0.01 * data_range, 2), c2 = std::pow(0.03 * data_range, 2);
  const auto mx = filt(x), my = filt(y);
  const auto sxx = filt(x * x) - mx * mx;
  const auto syy = filt(y * y) - my * my;
  const auto sxy = filt(x * y) - mx * my;
  const auto map = ((2 * mx * my + c1) * (2 * sxy + c2)) /
                   ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean().item<double>();
}

inline PsnrValue psnr_t(const torch::Tensor& pred, const torch::Tensor& gt,
                        const TonemapParams& tm = {}) {
  return psnr(mu_law(pred, tm), mu_law(gt, tm), 1.0);
}

inline double ssim_t(const torch::Tensor& pred, const torch::Tensor& gt,
                     const TonemapParams& tm = {}) {
  return ssim(mu_law(pred, tm), mu_law(gt, tm), 1.0);
}

namespace detail {

/// Both frames share the ground truth's peak normalisation.
inline std::pair<torch::Tensor, torch::Tensor> pu_pair(const torch::Tensor& pred,
                                                       const torch::Tensor& gt) {
  require_same_shape(pred, gt, "pu metrics");
  const double peak = gt.numel() ? gt.detach().max().item<double>() : 0.0;
  if (!(peak > 0.0)) {
    throw DegenerateInputError("pu metrics: ground truth is all zero");
  }
  return {pu_encode_with_peak(pred, peak), pu_encode_with_peak(gt, peak)};
}

}  // namespace detail

inline PsnrValue psnr_pu(const torch::Tensor& pred, const torch::Tensor& gt) {
  const auto [p, g] = detail::pu_pair(pred, gt);
  return psnr(p, g, pu21::encode(kPuPeakLuminance));
}

inline double ssim_pu(const torch::Tensor& pred, const torch::Tensor& gt) {
  const auto [p, g] = detail::pu_pair(pred, gt);
  return ssim(p, g, pu21::encode(kPuPeakLuminance));
}

/// Stacks row `row` of every tonemapped frame in time order: [T, W, 3].
inline torch::Tensor temporal_profile(const std::vector<torch::Tensor>& frames, int64_t row,
                                      const TonemapParams& tm = {}) {
  if (frames.empty()) throw InvalidInputError("temporal_profile: no frames");
  const auto width = frames.front().size(-1);
  std::vector<torch::Tensor> rows;
  rows.reserve(frames.size());
  for (const auto& f : frames) {
    if (f.dim() != 3 || f.size(0) != 3) {
      throw ContractViolation("temporal_profile: frames must be [3,H,W], got " + shape_string(f));
    }
    if (f.size(2) != width) throw ContractViolation("temporal_profile: frame widths differ");
    if (row < 0 || row >= f.size(1)) {
      throw InvalidInputError("temporal_profile: row " + std::to_string(row) +
                              " out of range for height " + std::to_string(f.size(1)));
    }
    rows.push_back(mu_law(f.select(1, row), tm).transpose(0, 1));  // [W,3]
  }
  return torch::stack(rows, 0);
}

struct FrameMetrics {
  std::string name;
  PsnrValue psnr_t;
  double ssim_t = 0.0;
  PsnrValue psnr_pu;
  double ssim_pu = 0.0;
  std::optional<double> hdr_vdp2;  // filled by external tooling only
};

inline FrameMetrics evaluate_frame(const std::string& name, const torch::Tensor& pred,
                                   const torch::Tensor& gt, const TonemapParams& tm = {}) {
  return FrameMetrics{name, psnr_t(pred, gt, tm), ssim_t(pred, gt, tm), psnr_pu(pred, gt),
                      ssim_pu(pred, gt), std::nullopt};
}

/// Per-frame metrics and their arithmetic means.
struct MetricReport {
  std::vector<FrameMetrics> frames;

  static PsnrValue mean_psnr(const std::vector<PsnrValue>& values) {
    double sum = 0.0;
    for (const auto& v : values) {
      if (v.infinite) return PsnrValue{0.0, true};
      sum += v.db;
    }
    return PsnrValue{values.empty() ? 0.0 : sum / values.size(), false};
  }

  PsnrValue mean_psnr_t() const {
    std::vector<PsnrValue> v;
    for (const auto& f : frames) v.push_back(f.psnr_t);
    return mean_psnr(v);
  }
  PsnrValue mean_psnr_pu() const {
    std::vector<PsnrValue> v;
    for (const auto& f : frames) v.push_back(f.psnr_pu);
    return mean_psnr(v);
  }
  double mean_ssim_t() const {
    double s = 0.0;
    for (const auto& f : frames) s += f.ssim_t;
    return frames.empty() ? 0.0 : s / frames.size();
  }
  double mean_ssim_pu() const {
    double s = 0.0;
    for (const auto& f : frames) s += f.ssim_pu;
    return frames.empty() ? 0.0 : s / frames.size();
  }

  static void put_psnr(nlohmann::json& j, const char* key, const PsnrValue& v) {
    j[key] = v.infinite ? nlohmann::json(nullptr) : nlohmann::json(v.db);
    j[std::string(key) + "_infinite"] = v.infinite;
  }

  nlohmann::json to_json() const {
    nlohmann::json out;
    out["frames"] = nlohmann::json::array();
    for (const auto& f : frames) {
      nlohmann::json j;
      j["name"] = f.name;
      put_psnr(j, "psnr_t", f.psnr_t);
      j["ssim_t"] = f.ssim_t;
      put_psnr(j, "psnr_pu", f.psnr_pu);
      j["ssim_pu"] = f.ssim_pu;
      j["hdr_vdp2"] = f.hdr_vdp2 ? nlohmann::json(*f.hdr_vdp2) : nlohmann::json(nullptr);
      out["frames"].push_back(std::move(j));
    }
    nlohmann::json s;
    s["frame_count"] = frames.size();
    put_psnr(s, "psnr_t", mean_psnr_t());
    s["ssim_t"] = mean_ssim_t();
    put_psnr(s, "psnr_pu", mean_psnr_pu());
    s["ssim_pu"] = mean_ssim_pu();
    out["summary"] = std::move(s);
    return out;
  }
};

}  // namespace lanhdr

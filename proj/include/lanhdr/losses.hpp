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
#include <memory>
#include <sstream>
#include <string>

#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"
#include "lanhdr/radiometry.hpp"

namespace lanhdr {

struct LossWeights {
  double l1 = 1.0;
  double perceptual = 0.1;
  double frequency = 0.1;
  double temporal = 0.1;
  double epsilon = 1e-3;  // Charbonnier epsilon

  void validate() const {
    if (l1 < 0 || perceptual < 0 || frequency < 0 || temporal < 0) {
      throw ConfigError("loss weights must be non-negative");
    }
    if (!(epsilon > 0)) throw ConfigError("loss epsilon must be positive");
  }
};

/// Scalar loss terms; undefined tensors count as zero.
struct LossComponents {
  torch::Tensor l1;
  torch::Tensor perceptual;
  torch::Tensor frequency;
  torch::Tensor temporal;
};

/// mean |T(pred) - T(gt)|
inline torch::Tensor l1_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                             const TonemapParams& tm = {}) {
  detail::require_same_shape(pred, gt, "l1_loss");
  return (mu_law(pred, tm) - mu_law(gt, tm)).abs().mean();
}

/// mean over |Re| and |Im| of FFT2(T(pred)) - FFT2(T(gt)).
inline torch::Tensor frequency_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                                    const TonemapParams& tm = {}) {
  detail::require_same_shape(pred, gt, "frequency_loss");
  if (pred.dim() < 2) throw ContractViolation("frequency_loss: expected at least 2-D input");
  const auto diff = torch::fft::fft2(mu_law(pred, tm) - mu_law(gt, tm));
  return torch::view_as_real(diff).abs().mean();
}

/// Per-pixel Charbonnier penalty on the difference between predicted and reference temporal
/// deltas in the tonemapped domain, mean-reduced.
inline torch::Tensor temporal_loss(const torch::Tensor& pred_t, const torch::Tensor& pred_prev,
                                   const torch::Tensor& gt_t, const torch::Tensor& gt_prev,
                                   const TonemapParams& tm = {}, double epsilon = 1e-3) {
  detail::require_same_shape(pred_t, pred_prev, "temporal_loss");
  detail::require_same_shape(pred_t, gt_t, "temporal_loss");
  detail::require_same_shape(pred_t, gt_prev, "temporal_loss");
  if (!(epsilon > 0)) throw InvalidInputError("temporal_loss: epsilon must be positive");
  const auto delta = (mu_law(pred_t, tm) - mu_law(pred_prev, tm)) -
                     (mu_law(gt_t, tm) - mu_law(gt_prev, tm));
  // Averaged as epsilon + mean(hypot - epsilon) so matching deltas give exactly epsilon.
  return (torch::hypot(delta, torch::full_like(delta, epsilon)) - epsilon).mean() + epsilon;
}

/// Fixed image-classification backbone used by the perceptual loss: VGG-19 convolution layers
/// through relu4_4 (just before the fourth max-pool). Layer indices follow the usual
/// `features.<i>` numbering so exported weights load by name.
class Vgg19FeaturesImpl : public torch::nn::Module {
 public:
  Vgg19FeaturesImpl() {
    const int64_t widths[] = {64, 64, -1, 128, 128, -1, 256, 256, 256, 256, -1, 512, 512, 512, 512};
    int64_t in = 3;
    for (int64_t w : widths) {
      if (w < 0) {
        features_->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2).stride(2)));
        continue;
      }
      features_->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, w, 3).padding(1)));
      features_->push_back(torch::nn::ReLU());
      in = w;
    }
    register_module("features", features_);
    mean_ = register_buffer("mean", torch::tensor({0.485, 0.456, 0.406}).view({1, 3, 1, 1}));
    std_ = register_buffer("std", torch::tensor({0.229, 0.224, 0.225}).view({1, 3, 1, 1}));
  }

  /// `x` is [B,3,H,W] in [0,1]; ImageNet normalisation is applied here.
  torch::Tensor forward(const torch::Tensor& x) {
    return features_->forward((detail::as_batched(x) - mean_) / std_);
  }

  /// Freezes all parameters.
  void freeze() {
    for (auto& p : parameters()) p.set_requires_grad(false);
    eval();
  }

 private:
  torch::nn::Sequential features_;
  torch::Tensor mean_;
  torch::Tensor std_;
};
TORCH_MODULE(Vgg19Features);

/// Loads frozen backbone weights from an archive holding a `features` submodule with
/// `<i>.weight/bias` entries (see tools/export_vgg19.py).
inline Vgg19Features load_vgg19_features(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("perceptual loss: backbone weights not found at '" + path.string() +
                      "' (set loss.perceptual to 0 to disable the term)");
  }
  Vgg19Features net;
  try {
    torch::load(net, path.string());
  } catch (const c10::Error& e) {
    throw ConfigError("perceptual loss: cannot read '" + path.string() +
                      "': " + e.what_without_backtrace());
  }
  net->freeze();
  return net;
}

/// mean squared distance between backbone features of the tonemapped frames.
inline torch::Tensor perceptual_loss(const torch::Tensor& pred, const torch::Tensor& gt,
                                     const TonemapParams& tm, Vgg19Features extractor) {
  detail::require_same_shape(pred, gt, "perceptual_loss");
  if (!extractor) {
    throw ConfigError("perceptual loss: no feature extractor configured");
  }
  const auto fp = extractor(mu_law(pred, tm));
  torch::Tensor fg;
  {
    torch::NoGradGuard no_grad;
    fg = extractor(mu_law(gt, tm));
  }
  return (fp - fg).square().mean();
}

/// Weighted sum of the loss terms. Throws TrainingDivergenceError if any term is not finite.
inline torch::Tensor total_loss(const LossComponents& c, const LossWeights& w) {
  const std::pair<const char*, const torch::Tensor*> terms[] = {
      {"l1", &c.l1}, {"perceptual", &c.perceptual}, {"frequency", &c.frequency},
      {"temporal", &c.temporal}};
  const double weights[] = {w.l1, w.perceptual, w.frequency, w.temporal};
  torch::Tensor total;
  std::ostringstream bad;
  for (int i = 0; i < 4; ++i) {
    const auto& t = *terms[i].second;
    if (!t.defined()) continue;
    const double v = t.detach().item<double>();
    if (!std::isfinite(v)) bad << ' ' << terms[i].first << '=' << v;
    auto term = t * weights[i];
    total = total.defined() ? total + term : term;
  }
  if (!bad.str().empty()) {
    throw TrainingDivergenceError("non-finite loss component(s):" + bad.str());
  }
  return total.defined() ? total : torch::zeros({}, torch::kDouble);
}

}  // namespace lanhdr

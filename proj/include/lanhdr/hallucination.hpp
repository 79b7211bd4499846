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

#include "lanhdr/alignment.hpp"
#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"
#include "lanhdr/model_config.hpp"
#include "lanhdr/radiometry.hpp"

namespace lanhdr {

/// F_o = elu(W_f * F_i) . sigmoid(W_g * F_i)
class GatedConv2dImpl : public torch::nn::Module {
 public:
  GatedConv2dImpl(int64_t in_channels, int64_t out_channels, int64_t kernel = 3,
                  int64_t stride = 1)
      : in_channels_(in_channels),
        feature_(torch::nn::Conv2dOptions(in_channels, out_channels, kernel)
                     .stride(stride)
                     .padding(kernel / 2)),
        gate_(torch::nn::Conv2dOptions(in_channels, out_channels, kernel)
                  .stride(stride)
                  .padding(kernel / 2)) {
    register_module("feature", feature_);
    register_module("gate", gate_);
  }

  torch::Tensor forward(const torch::Tensor& x) {
    detail::require_rank(x, 4, "gated_conv");
    if (x.size(1) != in_channels_) {
      throw ContractViolation("gated_conv: layer expects " + std::to_string(in_channels_) +
                              " input channels, got " + std::to_string(x.size(1)));
    }
    return torch::elu(feature_(x)) * torch::sigmoid(gate_(x));
  }

  torch::nn::Conv2d& feature_conv() { return feature_; }
  torch::nn::Conv2d& gate_conv() { return gate_; }

 private:
  int64_t in_channels_;
  torch::nn::Conv2d feature_;
  torch::nn::Conv2d gate_;
};
TORCH_MODULE(GatedConv2d);

inline FeatureMap gated_conv(const FeatureMap& input, GatedConv2d& layer) {
  return FeatureMap{layer(input.data), input.scale};
}

/// Continuous brightness mask: the luma of the LDR frame, no thresholding.
inline FeatureMap make_luminance_mask(const ExposureFrame& frame) {
  frame.validate();
  return FeatureMap{detail::as_batched(rgb_to_luma(frame.pixels)), Scale::kFull};
}

struct HallucinationFeatures {
  FeatureMap intermediate;  // F_h, half scale
  FeatureMap skip;          // full-scale encoder output consumed by decode()
};

/// Gated-convolution encoder-decoder. The encoder runs down to quarter scale and back up to
/// half scale, where its output is blended with the aligned features; decode() finishes the
/// trip to full resolution.
class HallucinationModuleImpl : public torch::nn::Module {
 public:
  static constexpr int64_t kInputChannels = 6 + 6 + 1 + 1;

  explicit HallucinationModuleImpl(const ModelConfig& cfg) {
    const int64_t c = cfg.feature_channels;
    enc_full_ = register_module("enc_full", GatedConv2d(kInputChannels, c));
    enc_half_ = register_module("enc_half", GatedConv2d(c, c, 3, 2));
    enc_quarter_ = register_module("enc_quarter", GatedConv2d(c, c, 3, 2));
    bottleneck1_ = register_module("bottleneck1", GatedConv2d(c, c));
    bottleneck2_ = register_module("bottleneck2", GatedConv2d(c, c));
    dec_half_ = register_module("dec_half", GatedConv2d(c, c));
    dec_full_ = register_module("dec_full", GatedConv2d(c, c));
  }

  HallucinationFeatures encode(const FeatureMap& neighbor_six, const FeatureMap& reference_six,
                               const FeatureMap& neighbor_mask, const FeatureMap& reference_mask) {
    for (const auto* f : {&neighbor_six, &reference_six, &neighbor_mask, &reference_mask}) {
      detail::require_rank(f->data, 4, "hallucinate_encode");
      detail::require_scale(*f, Scale::kFull, "hallucinate_encode");
    }
    if (neighbor_six.channels() != 6 || reference_six.channels() != 6 ||
        neighbor_mask.channels() != 1 || reference_mask.channels() != 1) {
      throw ContractViolation("hallucinate_encode: expected 6+6 image and 1+1 mask channels");
    }
    const auto& n = neighbor_six.data;
    for (const auto* t : {&reference_six.data, &neighbor_mask.data, &reference_mask.data}) {
      if (t->size(0) != n.size(0) || t->size(2) != n.size(2) || t->size(3) != n.size(3)) {
        throw ContractViolation("hallucinate_encode: inputs differ in batch or spatial size");
      }
    }
    if (n.size(2) % 4 != 0 || n.size(3) % 4 != 0) {
      throw ContractViolation("hallucinate_encode: spatial size must be a multiple of 4");
    }
    const auto x = torch::cat({n, reference_six.data, neighbor_mask.data, reference_mask.data}, 1);
    const auto full = enc_full_(x);
    const auto half = enc_half_(full);
    auto deep = enc_quarter_(half);
    deep = bottleneck2_(bottleneck1_(deep));
    const auto up = dec_half_(UpsampleBlockImpl::interpolate(deep)) + half;
    return HallucinationFeatures{FeatureMap{up, Scale::kHalf}, FeatureMap{full, Scale::kFull}};
  }

  /// Half-scale blended features -> full-scale LAN output. `skip` may be undefined.
  FeatureMap decode(const FeatureMap& blended, const FeatureMap& skip) {
    detail::require_rank(blended.data, 4, "hallucinate_decode");
    detail::require_scale(blended, Scale::kHalf, "hallucinate_decode");
    auto out = dec_full_(UpsampleBlockImpl::interpolate(blended.data));
    if (skip.data.defined()) {
      detail::require_scale(skip, Scale::kFull, "hallucinate_decode");
      detail::require_same_shape(out, skip.data, "hallucinate_decode skip");
      out = out + skip.data;
    }
    return FeatureMap{out, Scale::kFull};
  }

 private:
  GatedConv2d enc_full_{nullptr}, enc_half_{nullptr}, enc_quarter_{nullptr};
  GatedConv2d bottleneck1_{nullptr}, bottleneck2_{nullptr};
  GatedConv2d dec_half_{nullptr}, dec_full_{nullptr};
};
TORCH_MODULE(HallucinationModule);

}  // namespace lanhdr

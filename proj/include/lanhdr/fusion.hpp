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

#include <vector>

#include "lanhdr/alignment.hpp"
#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"
#include "lanhdr/hallucination.hpp"
#include "lanhdr/model_config.hpp"
#include "lanhdr/window.hpp"

namespace lanhdr {

struct BlendResult {
  FeatureMap fused;    // half scale
  torch::Tensor map;   // M, [B,1,h,w] in [0,1]
};

/// F_out = (1 - M) . F_h + M . (F_h + F_a), evaluated in the equivalent form F_h + M . F_a so
/// the M = 0, M = 1 and F_a = 0 cases are exact in floating point.
inline torch::Tensor blend_with_map(const torch::Tensor& aligned, const torch::Tensor& hallucinated,
                                    const torch::Tensor& map) {
  return hallucinated + map * aligned;
}

/// Predicts the blending map from concat(F_a, F_h).
class AdaptiveBlendImpl : public torch::nn::Module {
 public:
  explicit AdaptiveBlendImpl(int64_t channels)
      : conv1_(torch::nn::Conv2dOptions(2 * channels, channels, 3).padding(1)),
        conv2_(torch::nn::Conv2dOptions(channels, 1, 3).padding(1)) {
    register_module("conv1", conv1_);
    register_module("conv2", conv2_);
  }

  torch::Tensor predict_map(const torch::Tensor& aligned, const torch::Tensor& hallucinated) {
    auto h = conv1_(torch::cat({aligned, hallucinated}, 1));
    h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
    return torch::sigmoid(conv2_(h));
  }

  BlendResult forward(const FeatureMap& aligned, const FeatureMap& hallucinated) {
    detail::require_rank(aligned.data, 4, "adaptive_blend");
    detail::require_same_shape(aligned.data, hallucinated.data, "adaptive_blend");
    if (aligned.scale != hallucinated.scale) {
      throw ContractViolation("adaptive_blend: inputs are at different scales");
    }
    auto map = predict_map(aligned.data, hallucinated.data);
    return BlendResult{FeatureMap{blend_with_map(aligned.data, hallucinated.data, map),
                                  aligned.scale},
                       map};
  }

 private:
  torch::nn::Conv2d conv1_;
  torch::nn::Conv2d conv2_;
};
TORCH_MODULE(AdaptiveBlend);

/// Residual block with a 3x3 spatial branch and a 1x1 branch applied to the real 2-D spectrum
/// (real and imaginary parts stacked as channels).
class ResFFTConvBlockImpl : public torch::nn::Module {
 public:
  explicit ResFFTConvBlockImpl(int64_t channels, bool frequency_activation = true)
      : frequency_activation_(frequency_activation),
        spatial1_(torch::nn::Conv2dOptions(channels, channels, 3).padding(1)),
        spatial2_(torch::nn::Conv2dOptions(channels, channels, 3).padding(1)),
        spectral1_(torch::nn::Conv2dOptions(2 * channels, 2 * channels, 1)),
        spectral2_(torch::nn::Conv2dOptions(2 * channels, 2 * channels, 1)) {
    register_module("spatial1", spatial1_);
    register_module("spatial2", spatial2_);
    register_module("spectral1", spectral1_);
    register_module("spectral2", spectral2_);
  }

  torch::Tensor spatial_branch(const torch::Tensor& x) {
    return spatial2_(torch::relu(spatial1_(x)));
  }

  torch::Tensor frequency_branch(const torch::Tensor& x) {
    const int64_t h = x.size(2), w = x.size(3);
    const auto spectrum = torch::fft::rfft2(x);
    auto z = torch::cat({torch::real(spectrum), torch::imag(spectrum)}, 1);
    z = spectral1_(z);
    if (frequency_activation_) z = torch::relu(z);
    z = spectral2_(z);
    const auto parts = z.chunk(2, 1);
    return torch::fft::irfft2(torch::complex(parts[0].contiguous(), parts[1].contiguous()),
                              std::vector<int64_t>{h, w});
  }

  torch::Tensor forward(const torch::Tensor& x) {
    detail::require_rank(x, 4, "res_fft_conv_block");
    return x + spatial_branch(x) + frequency_branch(x);
  }

  void set_frequency_activation(bool on) { frequency_activation_ = on; }

  torch::nn::Conv2d& spatial1() { return spatial1_; }
  torch::nn::Conv2d& spatial2() { return spatial2_; }
  torch::nn::Conv2d& spectral1() { return spectral1_; }
  torch::nn::Conv2d& spectral2() { return spectral2_; }

 private:
  bool frequency_activation_;
  torch::nn::Conv2d spatial1_, spatial2_, spectral1_, spectral2_;
};
TORCH_MODULE(ResFFTConvBlock);

/// concat -> conv -> Res FFT-Conv blocks -> conv -> sigmoid.
class MergeNetworkImpl : public torch::nn::Module {
 public:
  explicit MergeNetworkImpl(const ModelConfig& cfg)
      : num_inputs_(cfg.window_size()),
        input_channels_(cfg.feature_channels),
        head_(torch::nn::Conv2dOptions(cfg.window_size() * cfg.feature_channels,
                                       cfg.merge_channels, 3)
                  .padding(1)),
        tail_(torch::nn::Conv2dOptions(cfg.merge_channels, 3, 3).padding(1)) {
    register_module("head", head_);
    for (int i = 0; i < cfg.merge_blocks; ++i) blocks_->push_back(ResFFTConvBlock(cfg.merge_channels));
    register_module("blocks", blocks_);
    register_module("tail", tail_);
  }

  torch::Tensor forward(const std::vector<FeatureMap>& features) {
    if (static_cast<int>(features.size()) != num_inputs_) {
      throw ContractViolation("merge: expected " + std::to_string(num_inputs_) +
                              " aligned feature maps, got " + std::to_string(features.size()));
    }
    std::vector<torch::Tensor> parts;
    parts.reserve(features.size());
    for (const auto& f : features) {
      detail::require_rank(f.data, 4, "merge");
      detail::require_scale(f, Scale::kFull, "merge");
      detail::require_same_shape(f.data, features.front().data, "merge");
      if (f.channels() != input_channels_) {
        throw ContractViolation("merge: feature maps must have " +
                                std::to_string(input_channels_) + " channels");
      }
      parts.push_back(f.data);
    }
    auto x = head_(torch::cat(parts, 1));
    x = blocks_->forward(x);
    return torch::sigmoid(tail_(x));
  }

 private:
  int num_inputs_;
  int64_t input_channels_;
  torch::nn::Conv2d head_;
  torch::nn::Sequential blocks_;
  torch::nn::Conv2d tail_;
};
TORCH_MODULE(MergeNetwork);

struct LanOutput {
  FeatureMap features;   // full scale
  torch::Tensor blend_map;
  MatchResult match;
};

struct NetworkOutput {
  torch::Tensor hdr;                    // [B,3,H,W] in (0,1)
  std::vector<torch::Tensor> blend_maps;  // per window frame
  std::vector<MatchResult> matches;
};

/// Weight-shared alignment networks plus the merging network. Parameter groups are registered
/// as "alignment", "hallucination", "blend" and "merge".
class LanHdrNetImpl : public torch::nn::Module {
 public:
  explicit LanHdrNetImpl(const ModelConfig& cfg)
      : config_(cfg),
        alignment_(cfg),
        hallucination_(cfg),
        blend_(cfg.feature_channels),
        merge_(cfg) {
    cfg.validate();
    register_module("alignment", alignment_);
    register_module("hallucination", hallucination_);
    register_module("blend", blend_);
    register_module("merge", merge_);
  }

  /// One LAN pass aligning window frame `neighbor` to the reference.
  LanOutput lan_forward(const FrameWindow& window, int neighbor) {
    const auto& n = window.frames.at(neighbor);
    const auto& r = window.reference();
    const auto six_n = window.six_channel(neighbor);
    const auto six_r = window.six_channel(window.reference_index);

    auto aligned = alignment_(n, six_n, r);
    auto hall = hallucination_->encode(FeatureMap{six_n, Scale::kFull},
                                       FeatureMap{six_r, Scale::kFull}, make_luminance_mask(n),
                                       make_luminance_mask(r));
    auto blended = blend_(aligned.aligned, hall.intermediate);
    auto out = hallucination_->decode(blended.fused, hall.skip);
    return LanOutput{std::move(out), std::move(blended.map), std::move(aligned.match)};
  }

  NetworkOutput forward(const FrameWindow& window) {
    window.validate(config_.window_size());
    if (window.height() % 4 != 0 || window.width() % 4 != 0) {
      throw ContractViolation("LanHdrNet: window size must be a multiple of 4 (pad first)");
    }
    NetworkOutput out;
    std::vector<FeatureMap> features;
    for (int i = 0; i < window.size(); ++i) {
      auto lan = lan_forward(window, i);
      features.push_back(std::move(lan.features));
      out.blend_maps.push_back(std::move(lan.blend_map));
      out.matches.push_back(std::move(lan.match));
    }
    out.hdr = merge_(features);
    return out;
  }

  const ModelConfig& config() const { return config_; }
  AlignmentModule& alignment() { return alignment_; }
  HallucinationModule& hallucination() { return hallucination_; }
  AdaptiveBlend& blend() { return blend_; }
  MergeNetwork& merge() { return merge_; }

 private:
  ModelConfig config_;
  AlignmentModule alignment_;
  HallucinationModule hallucination_;
  AdaptiveBlend blend_;
  MergeNetwork merge_;
};
TORCH_MODULE(LanHdrNet);

}  // namespace lanhdr

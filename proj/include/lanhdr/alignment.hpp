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

#include <utility>

#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"
#include "lanhdr/model_config.hpp"
#include "lanhdr/radiometry.hpp"

namespace lanhdr {

inline constexpr double kCosineNormFloor = 1e-8;
inline constexpr double kLeakySlope = 0.1;

/// 4x area-average reduction. H and W must be multiples of 4.
inline torch::Tensor downsample4(const torch::Tensor& frame) {
  if (!frame.defined() || frame.dim() < 3 || frame.dim() > 4) {
    throw ContractViolation("downsample4: expected [C,H,W] or [B,C,H,W]");
  }
  if (frame.size(-1) % 4 != 0 || frame.size(-2) % 4 != 0) {
    throw ContractViolation("downsample4: spatial size " + shape_string(frame) +
                            " is not divisible by 4");
  }
  const bool unbatched = frame.dim() == 3;
  auto out = F::avg_pool2d(detail::as_batched(frame), F::AvgPool2dFuncOptions(4).stride(4));
  return unbatched ? out.squeeze(0) : out;
}

/// 3x3 patches at every position of a [B,C,h,w] map: unit stride, reflect padding 1.
struct PatchSet {
  torch::Tensor patches;  // [B, n, 9C]
  int64_t height = 0;
  int64_t width = 0;
  int64_t channels = 0;

  int64_t size() const { return height * width; }
};

namespace detail {

inline torch::Tensor pad_for_patches(const torch::Tensor& x) {
  // Reflect padding needs at least two samples along each axis.
  auto opts = F::PadFuncOptions({1, 1, 1, 1});
  if (x.size(2) >= 2 && x.size(3) >= 2) {
    opts.mode(torch::kReflect);
  } else {
    opts.mode(torch::kReplicate);
  }
  return F::pad(x, opts);
}

}  // namespace detail

inline PatchSet unfold_patches(const torch::Tensor& features) {
  detail::require_rank(features, 4, "unfold_patches");
  const auto padded = detail::pad_for_patches(features);
  auto cols = F::unfold(padded, F::UnfoldFuncOptions(3));  // [B, 9C, n]
  return PatchSet{cols.transpose(1, 2).contiguous(), features.size(2), features.size(3),
                  features.size(1)};
}

/// Top-1 correspondence from each query patch to the key set.
struct MatchResult {
  torch::Tensor index;       // [B, n] int64, values in [0, n)
  torch::Tensor confidence;  // [B, n], cosine similarity in [-1, 1]
};

/// Cosine similarity argmax over all key patches for each query patch.
///
/// The n x n similarity matrix is evaluated in blocks of `tile_rows` query rows so peak memory
/// stays at tile_rows * n. Ties resolve to the lowest key index. The confidence is recomputed
/// from the selected pair so it carries gradient to both queries and keys.
inline MatchResult match_top1(const PatchSet& queries, const PatchSet& keys,
                              int64_t tile_rows = 1024) {
  const auto& q = queries.patches;
  const auto& k = keys.patches;
  if (!q.defined() || !k.defined() || q.numel() == 0 || k.numel() == 0) {
    throw InvalidInputError("match_top1: empty patch set");
  }
  if (q.dim() != 3 || k.dim() != 3 || q.size(0) != k.size(0) || q.size(1) != k.size(1) ||
      q.size(2) != k.size(2)) {
    throw ContractViolation("match_top1: query/key patch sets differ: " + shape_string(q) +
                            " vs " + shape_string(k));
  }
  if (tile_rows <= 0) throw InvalidInputError("match_top1: tile_rows must be positive");

  const auto qn = q / q.norm(2, -1, true).clamp_min(kCosineNormFloor);
  const auto kn = k / k.norm(2, -1, true).clamp_min(kCosineNormFloor);

  const int64_t n = q.size(1);
  torch::Tensor index;
  {
    torch::NoGradGuard no_grad;
    const auto kt = kn.detach().transpose(1, 2);
    std::vector<torch::Tensor> parts;
    for (int64_t start = 0; start < n; start += tile_rows) {
      const int64_t len = std::min(tile_rows, n - start);
      const auto sim = torch::bmm(qn.detach().narrow(1, start, len), kt);
      parts.push_back(sim.argmax(2));
    }
    index = torch::cat(parts, 1);
  }
  const auto picked =
      kn.gather(1, index.unsqueeze(-1).expand({-1, -1, kn.size(2)}));
  auto confidence = (qn * picked).sum(-1).clamp(-1.0, 1.0);
  return MatchResult{index, confidence};
}

/// Inverse of unfold_patches under overlap averaging. `patches` is [B, n, 9C].
inline torch::Tensor fold_patches(const torch::Tensor& patches, int64_t height, int64_t width) {
  const auto opts = F::FoldFuncOptions({height + 2, width + 2}, 3);
  auto summed = F::fold(patches.transpose(1, 2), opts);
  auto ones = torch::ones({1, 9, height * width}, patches.options().requires_grad(false));
  auto counts = F::fold(ones, opts);
  summed = summed.narrow(2, 1, height).narrow(3, 1, width);
  counts = counts.narrow(2, 1, height).narrow(3, 1, width);
  return summed / counts;
}

/// Places value patch I[i] at position i and folds the patches back to a [B,C,h,w] map,
/// averaging overlapping contributions.
inline torch::Tensor rearrange_values(const PatchSet& values, const MatchResult& match) {
  const int64_t n = values.size();
  if (match.index.size(1) != n || match.index.size(0) != values.patches.size(0)) {
    throw ContractViolation("rearrange_values: index map does not match the value set");
  }
  {
    const auto idx = match.index.detach();
    if (idx.min().item<int64_t>() < 0 || idx.max().item<int64_t>() >= n) {
      throw RuntimeError("rearrange_values: index map entry out of range");
    }
  }
  const auto dim = values.patches.size(2);
  const auto gathered =
      values.patches.gather(1, match.index.unsqueeze(-1).expand({-1, -1, dim}));
  return fold_patches(gathered, values.height, values.width);
}

/// concat(V, V') along channels, scaled by the confidence map.
inline torch::Tensor fuse_confidence(const torch::Tensor& values, const torch::Tensor& rearranged,
                                     const torch::Tensor& confidence) {
  detail::require_rank(values, 4, "fuse_confidence");
  detail::require_same_shape(values, rearranged, "fuse_confidence");
  const auto b = values.size(0), h = values.size(2), w = values.size(3);
  if (confidence.numel() != b * h * w) {
    throw ContractViolation("fuse_confidence: confidence map has " +
                            std::to_string(confidence.numel()) + " entries, expected " +
                            std::to_string(b * h * w));
  }
  return torch::cat({values, rearranged}, 1) * confidence.reshape({b, 1, h, w});
}

/// conv3x3 + LeakyReLU stack used by the key/query and value extractors.
class ConvStackImpl : public torch::nn::Module {
 public:
  ConvStackImpl(int64_t in_channels, int64_t channels, int depth = 3) {
    for (int i = 0; i < depth; ++i) {
      layers_->push_back(torch::nn::Conv2d(
          torch::nn::Conv2dOptions(i == 0 ? in_channels : channels, channels, 3).padding(1)));
      layers_->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(kLeakySlope)));
    }
    register_module("layers", layers_);
  }

  torch::Tensor forward(const torch::Tensor& x) { return layers_->forward(x); }

 private:
  torch::nn::Sequential layers_;
};
TORCH_MODULE(ConvStack);

/// Nearest 2x interpolation followed by conv3x3 + LeakyReLU.
class UpsampleBlockImpl : public torch::nn::Module {
 public:
  UpsampleBlockImpl(int64_t in_channels, int64_t out_channels)
      : conv_(torch::nn::Conv2dOptions(in_channels, out_channels, 3).padding(1)) {
    register_module("conv", conv_);
  }

  static torch::Tensor interpolate(const torch::Tensor& x) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .scale_factor(std::vector<double>{2.0, 2.0})
                                 .mode(torch::kNearest));
  }

  torch::Tensor forward(const torch::Tensor& x) {
    return F::leaky_relu(conv_(interpolate(x)), F::LeakyReLUFuncOptions().negative_slope(kLeakySlope));
  }

  torch::nn::Conv2d& conv() { return conv_; }

 private:
  torch::nn::Conv2d conv_;
};
TORCH_MODULE(UpsampleBlock);

struct AlignmentOutput {
  FeatureMap aligned;  // F_a, half scale
  MatchResult match;
  FeatureMap keys;     // quarter scale
  FeatureMap queries;  // quarter scale
};

/// Luminance-driven attention alignment of one neighbor to the reference.
class AlignmentModuleImpl : public torch::nn::Module {
 public:
  explicit AlignmentModuleImpl(const ModelConfig& cfg)
      : tile_rows_(cfg.attention_tile),
        key_query_(1, cfg.kq_channels),
        value_(6, cfg.value_channels),
        upsample_(2 * cfg.value_channels, cfg.feature_channels) {
    register_module("key_query", key_query_);
    register_module("value", value_);
    register_module("upsample", upsample_);
  }

  /// Shared-weight key/query features from two quarter-scale luma maps.
  std::pair<FeatureMap, FeatureMap> extract_key_query(const FeatureMap& neighbor_luma,
                                                      const FeatureMap& reference_luma) {
    for (const auto* f : {&neighbor_luma, &reference_luma}) {
      detail::require_rank(f->data, 4, "extract_key_query");
      detail::require_scale(*f, Scale::kQuarter, "extract_key_query");
      if (f->channels() != 1) {
        throw ContractViolation("extract_key_query: expected single-channel luma, got " +
                                std::to_string(f->channels()) + " channels");
      }
    }
    detail::require_same_shape(neighbor_luma.data, reference_luma.data, "extract_key_query");
    return {FeatureMap{key_query_(neighbor_luma.data), Scale::kQuarter},
            FeatureMap{key_query_(reference_luma.data), Scale::kQuarter}};
  }

  /// Quarter-scale fused features -> F_a at half scale.
  FeatureMap upsample_aligned(const FeatureMap& fused) {
    detail::require_scale(fused, Scale::kQuarter, "upsample_aligned");
    return FeatureMap{upsample_(fused.data), Scale::kHalf};
  }

  /// `neighbor_six` is the [B,6,H,W] concatenation of the neighbor's LDR and linear images.
  AlignmentOutput forward(const ExposureFrame& neighbor, const torch::Tensor& neighbor_six,
                          const ExposureFrame& reference) {
    const auto n_pixels = detail::as_batched(neighbor.pixels);
    const auto six = detail::as_batched(neighbor_six);
    if (six.size(1) != 6 || six.size(0) != n_pixels.size(0) ||
        six.size(2) != n_pixels.size(2) || six.size(3) != n_pixels.size(3)) {
      throw ContractViolation("align: six-channel neighbor input has shape " + shape_string(six));
    }
    detail::require_same_shape(n_pixels, detail::as_batched(reference.pixels), "align");

    const auto ref_adjusted = adjust_exposure(reference, neighbor.exposure_time);
    const FeatureMap key_luma{downsample4(rgb_to_luma(n_pixels)), Scale::kQuarter};
    const FeatureMap query_luma{downsample4(rgb_to_luma(detail::as_batched(ref_adjusted.pixels))),
                                Scale::kQuarter};
    auto [keys, queries] = extract_key_query(key_luma, query_luma);

    const auto value_features = value_(downsample4(six));
    const auto value_patches = unfold_patches(value_features);
    auto match = match_top1(unfold_patches(queries.data), unfold_patches(keys.data), tile_rows_);
    const auto rearranged = rearrange_values(value_patches, match);
    const FeatureMap fused{fuse_confidence(value_features, rearranged, match.confidence),
                           Scale::kQuarter};
    return AlignmentOutput{upsample_aligned(fused), std::move(match), std::move(keys),
                           std::move(queries)};
  }

  ConvStack& key_query() { return key_query_; }
  ConvStack& value() { return value_; }
  UpsampleBlock& upsample() { return upsample_; }

 private:
  int64_t tile_rows_;
  ConvStack key_query_;
  ConvStack value_;
  UpsampleBlock upsample_;
};
TORCH_MODULE(AlignmentModule);

}  // namespace lanhdr

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
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lanhdr/datapipe.hpp"
#include "lanhdr/error.hpp"
#include "lanhdr/fusion.hpp"
#include "lanhdr/image_io.hpp"
#include "lanhdr/metrics.hpp"

namespace lanhdr {

namespace detail {

/// 1-D blending weights for a tile: linear ramps over `overlap` samples on sides that touch
/// another tile, 1 elsewhere.
inline torch::Tensor tile_ramp(int64_t length, int64_t overlap, bool ramp_start, bool ramp_end) {
  auto w = torch::ones({length}, torch::kFloat);
  for (int64_t i = 0; i < overlap && i < length; ++i) {
    const float v = static_cast<float>(i + 1) / static_cast<float>(overlap + 1);
    if (ramp_start) w[i] = std::min(w[i].item<float>(), v);
    if (ramp_end) w[length - 1 - i] = std::min(w[length - 1 - i].item<float>(), v);
  }
  return w;
}

inline std::vector<int64_t> tile_starts(int64_t extent, int64_t tile, int64_t overlap) {
  if (extent <= tile) return {0};
  std::vector<int64_t> starts;
  const int64_t stride = tile - overlap;
  for (int64_t s = 0;; s += stride) {
    if (s + tile >= extent) {
      starts.push_back(extent - tile);
      break;
    }
    starts.push_back(s);
  }
  return starts;
}

}  // namespace detail

/// Reconstructs the HDR frame for one window: pads to a multiple of 4, runs the network
/// (optionally over overlapping tiles blended linearly) and crops back. Returns [3,H,W].
inline torch::Tensor reconstruct(LanHdrNet& net, const FrameWindow& window, int tile = 0,
                                 int overlap = 32) {
  torch::NoGradGuard no_grad;
  net->eval();
  const int64_t h = window.height(), w = window.width();
  const auto padded = pad_window(window, 4);
  const int64_t ph = padded.height(), pw = padded.width();

  if (tile <= 0 || (ph <= tile && pw <= tile)) {
    auto out = net->forward(padded).hdr.squeeze(0);
    return out.narrow(1, 0, h).narrow(2, 0, w).contiguous();
  }
  if (tile % 4 != 0) throw ConfigError("tile size must be a multiple of 4");
  const auto ys = detail::tile_starts(ph, tile, overlap);
  const auto xs = detail::tile_starts(pw, tile, overlap);
  const auto dtype = padded.frames.front().pixels.scalar_type();
  auto acc = torch::zeros({3, ph, pw}, torch::TensorOptions().dtype(dtype));
  auto weight = torch::zeros({1, ph, pw}, torch::TensorOptions().dtype(dtype));
  for (std::size_t iy = 0; iy < ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      const int64_t th = std::min<int64_t>(tile, ph), tw = std::min<int64_t>(tile, pw);
      const auto crop = crop_window(padded, ys[iy], xs[ix], th, tw);
      const auto out = net->forward(crop).hdr.squeeze(0);
      const auto wy = detail::tile_ramp(th, overlap, iy > 0, iy + 1 < ys.size());
      const auto wx = detail::tile_ramp(tw, overlap, ix > 0, ix + 1 < xs.size());
      const auto wt = (wy.unsqueeze(1) * wx.unsqueeze(0)).unsqueeze(0).to(dtype);
      acc.narrow(1, ys[iy], th).narrow(2, xs[ix], tw) += out * wt;
      weight.narrow(1, ys[iy], th).narrow(2, xs[ix], tw) += wt;
    }
  }
  return (acc / weight).narrow(1, 0, h).narrow(2, 0, w).contiguous();
}

/// Runs every complete window of a sequence and writes `<id>_<t>.exr` into `out_dir`.
/// Ground truth is never read.
inline std::vector<std::filesystem::path> infer_sequence(LanHdrNet& net, const SequenceRecord& seq,
                                                         const std::filesystem::path& out_dir,
                                                         int tile = 0, int overlap = 32) {
  if (seq.pattern.count != net->config().exposure_count) {
    throw DataError("sequence '" + seq.id + "' has a " + std::to_string(seq.pattern.count) +
                    "-exposure pattern but the model expects " +
                    std::to_string(net->config().exposure_count));
  }
  std::vector<std::filesystem::path> written;
  for (int t : valid_window_centres(seq.length(), seq.pattern)) {
    const auto window = make_window(seq, t, false, net->config().gamma);
    const auto hdr = reconstruct(net, window, tile, overlap);
    char name[64];
    std::snprintf(name, sizeof name, "_%05d.exr", t);
    const auto path = out_dir / (seq.id + name);
    io::write_hdr(hdr, path);
    written.push_back(path);
  }
  return written;
}

/// Pairs predicted and reference HDR frames by sorted file name order and scores them.
inline MetricReport evaluate_directories(const std::filesystem::path& pred_dir,
                                         const std::filesystem::path& gt_dir,
                                         const TonemapParams& tm = {}) {
  const auto preds = io::list_images(pred_dir, io::hdr_extensions());
  const auto gts = io::list_images(gt_dir, io::hdr_extensions());
  if (preds.empty() || gts.empty()) {
    throw DataError("eval: empty input (" + std::to_string(preds.size()) + " predicted, " +
                    std::to_string(gts.size()) + " reference frames)");
  }
  if (preds.size() != gts.size()) {
    throw DataError("eval: " + std::to_string(preds.size()) + " predicted frames but " +
                    std::to_string(gts.size()) + " reference frames");
  }
  MetricReport report;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto p = io::read_hdr(preds[i]).to(torch::kDouble).clamp_min(0.0);
    const auto g = io::read_hdr(gts[i]).to(torch::kDouble).clamp_min(0.0);
    if (p.sizes() != g.sizes()) {
      throw DataError("eval: '" + preds[i].string() + "' and '" + gts[i].string() +
                      "' differ in size");
    }
    report.frames.push_back(evaluate_frame(preds[i].filename().string(), p, g, tm));
  }
  return report;
}

}  // namespace lanhdr

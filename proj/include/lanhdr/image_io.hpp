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

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "lanhdr/error.hpp"
#include "lanhdr/feature.hpp"

namespace lanhdr::io {

namespace fs = std::filesystem;

namespace detail {

/// HxWx3 float32 BGR mat -> [3,H,W] RGB tensor (owning).
inline torch::Tensor mat_to_tensor(const cv::Mat& bgr_float) {
  cv::Mat rgb;
  cv::cvtColor(bgr_float, rgb, cv::COLOR_BGR2RGB);
  auto t = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kFloat).clone();
  return t.permute({2, 0, 1}).contiguous();
}

inline cv::Mat tensor_to_mat(const torch::Tensor& chw) {
  auto t = chw.detach().to(torch::kCPU, torch::kFloat);
  if (t.dim() == 4 && t.size(0) == 1) t = t.squeeze(0);
  if (t.dim() != 3 || t.size(0) != 3) {
    throw ContractViolation("image write: expected [3,H,W] tensor, got " + shape_string(t));
  }
  t = t.permute({1, 2, 0}).contiguous();
  cv::Mat rgb(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), CV_32FC3, t.data_ptr());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

inline std::string lower_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace detail

/// Decodes an 8- or 16-bit PNG/JPEG into a [3,H,W] tensor in [0,1].
inline torch::Tensor read_frame(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("image not found: '" + path.string() + "'");
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw DataError("cannot decode image '" + path.string() + "'");
  double scale = 1.0;
  switch (m.depth()) {
    case CV_8U:
      scale = 1.0 / 255.0;
      break;
    case CV_16U:
      scale = 1.0 / 65535.0;
      break;
    default:
      throw DataError("'" + path.string() + "' is not an 8/16-bit LDR image");
  }
  if (m.channels() == 1) {
    cv::cvtColor(m, m, cv::COLOR_GRAY2BGR);
  } else if (m.channels() == 4) {
    cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
  }
  cv::Mat f;
  m.convertTo(f, CV_32F, scale);
  return detail::mat_to_tensor(f);
}

/// Reads a linear HDR frame (.exr or .hdr) as [3,H,W] float.
inline torch::Tensor read_hdr(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("HDR frame not found: '" + path.string() + "'");
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED | cv::IMREAD_ANYDEPTH);
  if (m.empty()) throw DataError("cannot decode HDR frame '" + path.string() + "'");
  if (m.channels() == 1) cv::cvtColor(m, m, cv::COLOR_GRAY2BGR);
  if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
  cv::Mat f;
  m.convertTo(f, CV_32F);
  return detail::mat_to_tensor(f);
}

/// Writes a linear HDR frame. `.exr` is stored as half float, `.hdr` as Radiance RGBE.
inline void write_hdr(const torch::Tensor& frame, const fs::path& path) {
  const auto ext = detail::lower_extension(path);
  std::vector<int> params;
  if (ext == ".exr") {
    params = {cv::IMWRITE_EXR_TYPE, cv::IMWRITE_EXR_TYPE_HALF};
  } else if (ext != ".hdr") {
    throw DataError("unsupported HDR output format '" + ext + "' for '" + path.string() + "'");
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), detail::tensor_to_mat(frame), params);
  } catch (const cv::Exception& e) {
    throw DataError("cannot write '" + path.string() + "': " + e.what());
  }
  if (!ok) throw DataError("cannot write '" + path.string() + "'");
}

/// Writes a [3,H,W] tensor in [0,1] as an 8-bit image.
inline void write_ldr(const torch::Tensor& frame, const fs::path& path) {
  cv::Mat f = detail::tensor_to_mat(frame.clamp(0.0, 1.0));
  cv::Mat u8;
  f.convertTo(u8, CV_8U, 255.0);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), u8)) throw DataError("cannot write '" + path.string() + "'");
}

/// Regular files in `dir` with one of `extensions` (lower-case, with dot), sorted by name.
inline std::vector<fs::path> list_images(const fs::path& dir,
                                         const std::vector<std::string>& extensions) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = detail::lower_extension(entry.path());
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline const std::vector<std::string>& hdr_extensions() {
  static const std::vector<std::string> v{".exr", ".hdr"};
  return v;
}

inline const std::vector<std::string>& ldr_extensions() {
  static const std::vector<std::string> v{".png", ".jpg", ".jpeg", ".tif", ".tiff"};
  return v;
}

}  // namespace lanhdr::io

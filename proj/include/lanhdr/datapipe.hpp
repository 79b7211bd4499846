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

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lanhdr/error.hpp"
#include "lanhdr/image_io.hpp"
#include "lanhdr/radiometry.hpp"
#include "lanhdr/window.hpp"

namespace lanhdr {

/// Cyclic exposure schedule: frame i has exposure 2^(stops * ((i + phase) mod count)).
struct ExposurePattern {
  int count = 2;
  double stops = 2.0;
  int phase = 0;

  void validate() const {
    if (count != 2 && count != 3) throw ConfigError("exposure pattern size must be 2 or 3");
    if (!(stops > 0.0) || !std::isfinite(stops)) {
      throw ConfigError("exposure gap must be a positive number of stops");
    }
    if (phase < 0) throw ConfigError("exposure phase must be non-negative");
  }

  double exposure(int frame) const {
    const int slot = ((frame + phase) % count + count) % count;
    return std::exp2(stops * slot);
  }

  /// Neighbours on each side of the reference for this pattern size.
  int half_window() const { return count == 3 ? 3 : 2; }
  int window_size() const { return 2 * half_window() + 1; }
};

struct NoiseConfig {
  bool enabled = false;
  double shot = 0.0;  // variance per unit linear signal
  double read = 0.0;  // standard deviation
};

/// Renders an 8-bit LDR exposure from a clean gamma-encoded frame: linearise, scale by the
/// exposure, add optional noise, clip, re-encode and quantise to 8 bits.
inline ExposureFrame synthesize_exposure(const torch::Tensor& clean, double exposure,
                                         double gamma = kDefaultGamma,
                                         const NoiseConfig& noise = {},
                                         std::mt19937_64* rng = nullptr) {
  if (!(exposure > 0.0)) throw ConfigError("synthesize_exposure: exposure must be positive");
  auto linear = clean.clamp(0.0, 1.0).pow(gamma) * exposure;
  if (noise.enabled) {
    if (!rng) throw ConfigError("synthesize_exposure: noise requires a random generator");
    auto gen = at::make_generator<at::CPUGeneratorImpl>((*rng)());
    const auto sigma = torch::sqrt(linear * noise.shot + noise.read * noise.read);
    linear = linear + sigma * at::randn(linear.sizes(), gen, linear.options());
  }
  auto ldr = linear.clamp(0.0, 1.0).pow(1.0 / gamma);
  ldr = torch::round(ldr * 255.0) / 255.0;
  return ExposureFrame{ldr, exposure, gamma};
}

/// Synthetic ground truth for a clean frame: its linear signal.
inline torch::Tensor synthetic_ground_truth(const torch::Tensor& clean,
                                            double gamma = kDefaultGamma) {
  return clean.clamp(0.0, 1.0).pow(gamma);
}

/// One video as listed in a dataset manifest.
struct SequenceRecord {
  std::string id;
  std::vector<std::filesystem::path> frame_paths;
  std::vector<std::filesystem::path> ground_truth_paths;  // empty when no ground truth
  ExposurePattern pattern;

  bool has_ground_truth() const { return !ground_truth_paths.empty(); }
  int length() const { return static_cast<int>(frame_paths.size()); }

  void validate(bool check_files = true) const {
    pattern.validate();
    if (frame_paths.empty()) throw DataError("sequence '" + id + "' lists no frames");
    if (has_ground_truth() && ground_truth_paths.size() != frame_paths.size()) {
      throw DataError("sequence '" + id + "': " + std::to_string(frame_paths.size()) +
                      " frames but " + std::to_string(ground_truth_paths.size()) +
                      " ground-truth frames");
    }
    if (!check_files) return;
    for (const auto* list : {&frame_paths, &ground_truth_paths}) {
      for (const auto& p : *list) {
        if (!std::filesystem::exists(p)) {
          throw DataError("sequence '" + id + "': missing file '" + p.string() + "'");
        }
      }
    }
  }
};

/// Manifest schema:
/// {"sequences": [{"id": str, "frames": [path...], "ground_truth": [path...]?,
///                 "exposures": 2|3, "stops": float, "phase": int?}]}
/// Relative paths resolve against the manifest's directory.
inline std::vector<SequenceRecord> load_manifest(const std::filesystem::path& path,
                                                 bool check_files = true) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest '" + path.string() + "' is not valid JSON: " + e.what());
  }
  const auto base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  std::vector<SequenceRecord> out;
  try {
    for (const auto& s : j.at("sequences")) {
      SequenceRecord r;
      r.id = s.at("id").get<std::string>();
      for (const auto& f : s.at("frames")) r.frame_paths.push_back(resolve(f.get<std::string>()));
      if (s.contains("ground_truth")) {
        for (const auto& f : s.at("ground_truth")) {
          r.ground_truth_paths.push_back(resolve(f.get<std::string>()));
        }
      }
      r.pattern.count = s.at("exposures").get<int>();
      r.pattern.stops = s.at("stops").get<double>();
      r.pattern.phase = s.value("phase", 0);
      r.validate(check_files);
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest '" + path.string() + "': " + e.what());
  } catch (const ConfigError& e) {
    throw DataError("manifest '" + path.string() + "': " + e.what());
  }
  if (out.empty()) throw DataError("manifest '" + path.string() + "' lists no sequences");
  return out;
}

inline void save_manifest(const std::vector<SequenceRecord>& records,
                          const std::filesystem::path& path) {
  nlohmann::json j;
  j["sequences"] = nlohmann::json::array();
  const auto base = path.parent_path();
  const auto rel = [&](const std::filesystem::path& p) {
    return base.empty() ? p.string() : std::filesystem::relative(p, base).string();
  };
  for (const auto& r : records) {
    nlohmann::json s;
    s["id"] = r.id;
    s["frames"] = nlohmann::json::array();
    for (const auto& p : r.frame_paths) s["frames"].push_back(rel(p));
    if (r.has_ground_truth()) {
      s["ground_truth"] = nlohmann::json::array();
      for (const auto& p : r.ground_truth_paths) s["ground_truth"].push_back(rel(p));
    }
    s["exposures"] = r.pattern.count;
    s["stops"] = r.pattern.stops;
    s["phase"] = r.pattern.phase;
    j["sequences"].push_back(std::move(s));
  }
  if (base.has_filename()) std::filesystem::create_directories(base);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

/// Raised when a window would need frames beyond the sequence ends; such t are skipped.
class WindowBoundaryError : public InvalidInputError {
 public:
  using InvalidInputError::InvalidInputError;
};

/// Indices t with a complete window.
inline std::vector<int> valid_window_centres(int length, const ExposurePattern& pattern) {
  std::vector<int> out;
  for (int t = pattern.half_window(); t + pattern.half_window() < length; ++t) out.push_back(t);
  return out;
}

/// Builds the window centred on frame t from in-memory LDR frames [3,H,W].
inline FrameWindow make_window(const std::vector<torch::Tensor>& ldr,
                               const ExposurePattern& pattern, int t,
                               const torch::Tensor& ground_truth = {},
                               double gamma = kDefaultGamma) {
  pattern.validate();
  const int n = pattern.half_window();
  if (t - n < 0 || t + n >= static_cast<int>(ldr.size())) {
    throw WindowBoundaryError("no complete window at t=" + std::to_string(t) + " (needs " +
                              std::to_string(n) + " neighbours per side, sequence has " +
                              std::to_string(ldr.size()) + " frames)");
  }
  std::vector<ExposureFrame> frames;
  for (int i = t - n; i <= t + n; ++i) {
    frames.push_back(ExposureFrame{ldr[i], pattern.exposure(i), gamma});
  }
  auto w = FrameWindow::from_frames(std::move(frames), ground_truth);
  w.validate(pattern.window_size());
  return w;
}

/// Builds the window centred on frame t, reading frames from disk. Ground truth is read only
/// when `with_ground_truth` is set.
inline FrameWindow make_window(const SequenceRecord& seq, int t, bool with_ground_truth,
                               double gamma = kDefaultGamma) {
  const int n = seq.pattern.half_window();
  if (t - n < 0 || t + n >= seq.length()) {
    throw WindowBoundaryError("sequence '" + seq.id + "': no complete window at t=" +
                              std::to_string(t));
  }
  std::vector<torch::Tensor> ldr(seq.length());
  for (int i = t - n; i <= t + n; ++i) ldr[i] = io::read_frame(seq.frame_paths[i]);
  torch::Tensor gt;
  if (with_ground_truth) {
    if (!seq.has_ground_truth()) {
      throw DataError("sequence '" + seq.id + "' has no ground truth");
    }
    gt = io::read_hdr(seq.ground_truth_paths[t]);
  }
  return make_window(ldr, seq.pattern, t, gt, gamma);
}

namespace detail {

inline FrameWindow map_window(const FrameWindow& w,
                              const std::function<torch::Tensor(const torch::Tensor&)>& fn) {
  FrameWindow out = w;
  for (auto& f : out.frames) f.pixels = fn(f.pixels);
  for (auto& l : out.linear) l.pixels = fn(l.pixels);
  if (out.ground_truth.defined()) out.ground_truth = fn(out.ground_truth);
  return out;
}

}  // namespace detail

/// Spatial crop shared by every frame of the window.
inline FrameWindow crop_window(const FrameWindow& w, int64_t top, int64_t left, int64_t height,
                               int64_t width) {
  if (top < 0 || left < 0 || top + height > w.height() || left + width > w.width()) {
    throw ContractViolation("crop_window: crop exceeds the frame");
  }
  return detail::map_window(w, [&](const torch::Tensor& t) {
    return t.narrow(-2, top, height).narrow(-1, left, width).contiguous();
  });
}

/// Replicate-pads every frame on the bottom/right to a multiple of `multiple`.
inline FrameWindow pad_window(const FrameWindow& w, int64_t multiple = 4) {
  const int64_t ph = (multiple - w.height() % multiple) % multiple;
  const int64_t pw = (multiple - w.width() % multiple) % multiple;
  if (ph == 0 && pw == 0) return w;
  return detail::map_window(w, [&](const torch::Tensor& t) {
    const bool batched = t.dim() == 4;
    auto b = batched ? t : t.unsqueeze(0);
    b = F::pad(b, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReplicate));
    return batched ? b : b.squeeze(0);
  });
}

/// Geometric and colour augmentation drawn once per window.
struct Augmentation {
  bool flip = false;               // horizontal flip, applied before rotation
  int rot90 = 0;                   // counter-clockwise quarter turns, 0..3
  std::array<int, 3> permutation{0, 1, 2};
  std::array<double, 3> gain{1.0, 1.0, 1.0};  // linear-domain per-channel gain, <= 1

  bool is_identity() const {
    return !flip && rot90 == 0 && permutation == std::array<int, 3>{0, 1, 2} &&
           gain == std::array<double, 3>{1.0, 1.0, 1.0};
  }
};

inline Augmentation draw_augmentation(std::mt19937_64& rng, bool square, double min_gain = 0.8) {
  Augmentation a;
  a.flip = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
  a.rot90 = square ? std::uniform_int_distribution<int>(0, 3)(rng)
                   : 2 * std::uniform_int_distribution<int>(0, 1)(rng);
  std::shuffle(a.permutation.begin(), a.permutation.end(), rng);
  std::uniform_real_distribution<double> g(min_gain, 1.0);
  for (auto& v : a.gain) v = g(rng);
  return a;
}

/// Applies one augmentation to every frame. The LDR frames get gain^(1/gamma) so their linear
/// companions (recomputed) and the ground truth both see exactly `gain`. Exposure tags are kept.
inline FrameWindow apply_augmentation(const FrameWindow& w, const Augmentation& a) {
  if (a.rot90 % 2 == 1 && w.height() != w.width()) {
    throw ContractViolation("augment: odd quarter turns need square frames");
  }
  const auto geometric = [&](const torch::Tensor& t) {
    auto out = a.flip ? t.flip({-1}) : t;
    if (a.rot90 != 0) out = torch::rot90(out, a.rot90, {-2, -1});
    const auto perm = torch::tensor({a.permutation[0], a.permutation[1], a.permutation[2]},
                                    torch::kLong);
    return out.index_select(-3, perm).contiguous();
  };
  const auto gain_tensor = [&](const torch::Tensor& like, double power) {
    auto g = torch::tensor({std::pow(a.gain[0], power), std::pow(a.gain[1], power),
                            std::pow(a.gain[2], power)},
                           like.options());
    return g.view({3, 1, 1});
  };
  FrameWindow out = w;
  for (auto& f : out.frames) {
    auto p = geometric(f.pixels);
    f.pixels = (p * gain_tensor(p, 1.0 / f.gamma)).clamp(0.0, 1.0);
  }
  for (std::size_t i = 0; i < out.frames.size(); ++i) out.linear[i] = ldr_to_linear(out.frames[i]);
  if (out.ground_truth.defined()) {
    auto g = geometric(out.ground_truth);
    out.ground_truth = g * gain_tensor(g, 1.0);
  }
  return out;
}

inline FrameWindow augment(const FrameWindow& w, std::mt19937_64& rng) {
  return apply_augmentation(w, draw_augmentation(rng, w.height() == w.width()));
}

/// Uniform sampler over (sequence, t) pairs where windows at both t-1 and t exist. Shared by
/// loader threads; draws are serialised.
class WindowSampler {
 public:
  struct Draw {
    std::size_t sequence = 0;
    int t = 0;
  };

  WindowSampler(const std::vector<SequenceRecord>& records, uint64_t seed) : rng_(seed) {
    for (std::size_t s = 0; s < records.size(); ++s) {
      const auto centres = valid_window_centres(records[s].length(), records[s].pattern);
      for (int t : centres) {
        if (t - 1 >= records[s].pattern.half_window()) slots_.push_back({s, t});
      }
    }
    if (slots_.empty()) {
      // Sequences with a single complete window still train, just without temporal pairs.
      for (std::size_t s = 0; s < records.size(); ++s) {
        for (int t : valid_window_centres(records[s].length(), records[s].pattern)) {
          slots_.push_back({s, t});
        }
      }
    }
    if (slots_.empty()) throw DataError("no sequence is long enough for a complete window");
  }

  Draw next() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::uniform_int_distribution<std::size_t> d(0, slots_.size() - 1);
    return slots_[d(rng_)];
  }

  /// Uses the sampler's generator for an auxiliary draw (crop offsets, augmentation seed).
  uint64_t next_seed() {
    std::lock_guard<std::mutex> lock(mutex_);
    return rng_();
  }

  std::size_t size() const { return slots_.size(); }

 private:
  std::vector<Draw> slots_;
  std::mt19937_64 rng_;
  std::mutex mutex_;
};

}  // namespace lanhdr

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
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanhdr/checkpoint.hpp"
#include "lanhdr/config.hpp"
#include "lanhdr/datapipe.hpp"
#include "lanhdr/error.hpp"
#include "lanhdr/fusion.hpp"
#include "lanhdr/losses.hpp"

namespace lanhdr {

/// Window at t (with ground truth) and, when available, the window at t-1 for the temporal term.
struct TrainingSample {
  FrameWindow current;
  std::optional<FrameWindow> previous;
};

using SampleSource = std::function<TrainingSample()>;

/// Draws random shared crops of consecutive windows from a manifest.
class ManifestSampleSource {
 public:
  ManifestSampleSource(std::vector<SequenceRecord> records, const RunConfig& cfg)
      : records_(std::move(records)),
        sampler_(records_, cfg.seed),
        crop_(cfg.data.crop),
        augment_(cfg.data.augment),
        min_gain_(cfg.data.min_gain),
        gamma_(cfg.model.gamma) {
    for (const auto& r : records_) {
      if (r.pattern.count != cfg.model.exposure_count) {
        throw DataError("sequence '" + r.id + "' has a " + std::to_string(r.pattern.count) +
                        "-exposure pattern but the model expects " +
                        std::to_string(cfg.model.exposure_count));
      }
      if (!r.has_ground_truth()) {
        throw DataError("training sequence '" + r.id + "' has no ground truth");
      }
    }
  }

  TrainingSample operator()() {
    const auto draw = sampler_.next();
    std::mt19937_64 rng(sampler_.next_seed());
    const auto& seq = records_[draw.sequence];
    auto current = make_window(seq, draw.t, true, gamma_);
    std::optional<FrameWindow> previous;
    if (draw.t - 1 >= seq.pattern.half_window()) previous = make_window(seq, draw.t - 1, true, gamma_);

    const int64_t side = std::min<int64_t>({crop_, current.height() / 4 * 4, current.width() / 4 * 4});
    const int64_t top = std::uniform_int_distribution<int64_t>(0, current.height() - side)(rng);
    const int64_t left = std::uniform_int_distribution<int64_t>(0, current.width() - side)(rng);
    current = crop_window(current, top, left, side, side);
    if (previous) previous = crop_window(*previous, top, left, side, side);
    if (augment_) {
      const auto a = draw_augmentation(rng, true, min_gain_);
      current = apply_augmentation(current, a);
      if (previous) previous = apply_augmentation(*previous, a);
    }
    return TrainingSample{std::move(current), std::move(previous)};
  }

 private:
  std::vector<SequenceRecord> records_;
  WindowSampler sampler_;
  int64_t crop_;
  bool augment_;
  double min_gain_;
  double gamma_;
};

struct StepStats {
  int64_t step = 0;
  double total = 0, l1 = 0, perceptual = 0, frequency = 0, temporal = 0;
  double lr = 0;

  nlohmann::json to_json() const {
    return {{"step", step},           {"loss", total},         {"l1", l1},
            {"perceptual", perceptual}, {"frequency", frequency}, {"temporal", temporal},
            {"lr", lr}};
  }
};

/// Puts libtorch into reproducible single-threaded mode and seeds its generator.
inline void configure_determinism(const RunConfig& cfg) {
  if (cfg.deterministic) {
    at::globalContext().setDeterministicAlgorithms(true, false);
    torch::set_num_threads(1);
  }
  torch::manual_seed(cfg.seed);
}

class Trainer {
 public:
  Trainer(RunConfig cfg, SampleSource source)
      : cfg_(std::move(cfg)),
        source_(std::move(source)),
        net_((configure_determinism(cfg_), cfg_.model)),
        optimizer_(net_->parameters(), torch::optim::AdamWOptions(cfg_.optim.lr)
                                           .betas({cfg_.optim.beta1, cfg_.optim.beta2})
                                           .weight_decay(cfg_.optim.weight_decay)),
        hash_(model_config_hash(cfg_)) {
    if (cfg_.loss.weights.perceptual > 0) vgg_ = load_vgg19_features(cfg_.loss.vgg_weights);
  }

  LanHdrNet& net() { return net_; }
  torch::optim::AdamW& optimizer() { return optimizer_; }
  int64_t current_step() const { return step_; }
  const std::string& config_hash() const { return hash_; }
  const RunConfig& config() const { return cfg_; }

  /// Loss terms for one sample. Terms with zero weight are skipped.
  LossComponents losses(const TrainingSample& sample) {
    const TonemapParams tm{cfg_.loss.mu};
    const auto& w = cfg_.loss.weights;
    const auto gt = ground_truth(sample.current);
    const auto pred = net_->forward(sample.current).hdr;
    LossComponents c;
    c.l1 = l1_loss(pred, gt, tm);
    if (w.frequency > 0) c.frequency = frequency_loss(pred, gt, tm);
    if (w.perceptual > 0) c.perceptual = perceptual_loss(pred, gt, tm, vgg_);
    if (w.temporal > 0 && sample.previous) {
      const auto gt_prev = ground_truth(*sample.previous);
      const auto pred_prev = net_->forward(*sample.previous).hdr;
      c.temporal = temporal_loss(pred, pred_prev, gt, gt_prev, tm, w.epsilon);
    }
    return c;
  }

  /// One optimizer update over `data.batch_size` samples (gradients accumulated per sample).
  StepStats step() {
    net_->train();
    optimizer_.zero_grad();
    StepStats s;
    const int batch = cfg_.data.batch_size;
    const auto value = [](const torch::Tensor& t) { return t.defined() ? t.item<double>() : 0.0; };
    for (int b = 0; b < batch; ++b) {
      const auto sample = source_();
      const auto c = losses(sample);
      const auto total = total_loss(c, cfg_.loss.weights);
      (total / batch).backward();
      s.total += total.item<double>() / batch;
      s.l1 += value(c.l1) / batch;
      s.perceptual += value(c.perceptual) / batch;
      s.frequency += value(c.frequency) / batch;
      s.temporal += value(c.temporal) / batch;
    }
    optimizer_.step();
    s.step = ++step_;
    s.lr = cfg_.optim.lr;
    return s;
  }

  void save(const std::filesystem::path& path) {
    save_checkpoint(path, net_, step_, hash_, &optimizer_);
  }

  void resume(const std::filesystem::path& path) {
    step_ = load_checkpoint(path, net_, hash_, &optimizer_).step;
  }

  std::filesystem::path checkpoint_dir() const {
    return std::filesystem::path(cfg_.output_dir) / "checkpoints";
  }

  /// Trains until optim.max_steps, resuming from checkpoints/last.pt when present. Writes a
  /// checkpoint at start, every checkpoint_every steps and at the end; appends one JSON line
  /// per logged step to train_log.jsonl.
  void run(std::ostream* console = nullptr) {
    const auto dir = checkpoint_dir();
    const auto last = dir / "last.pt";
    std::filesystem::create_directories(dir);
    if (std::filesystem::exists(last)) {
      resume(last);
      if (console) *console << "resumed from " << last << " at step " << step_ << '\n';
    } else {
      save_named(dir, last);
    }
    std::ofstream log(std::filesystem::path(cfg_.output_dir) / "train_log.jsonl", std::ios::app);
    while (step_ < cfg_.optim.max_steps) {
      StepStats s;
      try {
        s = step();
      } catch (const TrainingDivergenceError& e) {
        throw TrainingDivergenceError(std::string(e.what()) + " at step " +
                                      std::to_string(step_ + 1) + "; last good checkpoint: " +
                                      last.string());
      }
      if (s.step % cfg_.optim.log_every == 0 || s.step == cfg_.optim.max_steps) {
        log << s.to_json().dump() << '\n';
        log.flush();
        if (console) *console << s.to_json().dump() << '\n';
      }
      if (s.step % cfg_.optim.checkpoint_every == 0 || s.step == cfg_.optim.max_steps) {
        save_named(dir, last);
      }
    }
  }

 private:
  torch::Tensor ground_truth(const FrameWindow& w) const {
    if (!w.ground_truth.defined()) throw DataError("training window has no ground truth");
    return detail::as_batched(w.ground_truth);
  }

  void save_named(const std::filesystem::path& dir, const std::filesystem::path& last) {
    char name[32];
    std::snprintf(name, sizeof name, "step_%08lld.pt", static_cast<long long>(step_));
    save(dir / name);
    save(last);
  }

  RunConfig cfg_;
  SampleSource source_;
  LanHdrNet net_;
  torch::optim::AdamW optimizer_;
  std::string hash_;
  Vgg19Features vgg_{nullptr};
  int64_t step_ = 0;
};

}  // namespace lanhdr

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

#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

using namespace lanhdr;
namespace lt = lanhdr::testing;

namespace {

RunConfig tiny_config(const std::filesystem::path& out, int64_t steps) {
  auto cfg = make_config(nlohmann::json::parse(R"({
    "model": {"kq_channels": 4, "value_channels": 4, "feature_channels": 4,
              "merge_channels": 4, "merge_blocks": 1},
    "data": {"crop": 16, "batch_size": 2},
    "optim": {"checkpoint_every": 5, "log_every": 1},
    "loss": {"perceptual": 0.0}
  })"));
  cfg.optim.max_steps = steps;
  cfg.output_dir = out.string();
  return cfg;
}

/// In-memory source cycling through windows of one synthetic moving sequence.
SampleSource synthetic_source(uint64_t seed) {
  torch::manual_seed(seed);
  auto w = lt::synthetic_window(16, 16);
  auto prev = lt::synthetic_window(16, 16);
  return [w, prev] { return TrainingSample{w, prev}; };
}

std::vector<torch::Tensor> parameter_snapshot(LanHdrNet& net) {
  std::vector<torch::Tensor> out;
  for (const auto& p : net->parameters()) out.push_back(p.detach().clone());
  return out;
}

}  // namespace

TEST(Config, DefaultsOverridesAndErrors) {
  const auto c = make_config();
  EXPECT_EQ(c.model.exposure_count, 2);
  EXPECT_DOUBLE_EQ(c.optim.lr, 1e-4);
  EXPECT_DOUBLE_EQ(c.optim.beta1, 0.9);
  EXPECT_DOUBLE_EQ(c.optim.beta2, 0.999);
  EXPECT_DOUBLE_EQ(c.loss.weights.perceptual, 0.1);
  EXPECT_EQ(c.model.merge_blocks, 5);

  const auto o = make_config({}, {"optim.lr=2e-4", "model.exposure_count=3", "output_dir=runs/x",
                                  "data.augment=false"});
  EXPECT_DOUBLE_EQ(o.optim.lr, 2e-4);
  EXPECT_EQ(o.model.exposure_count, 3);
  EXPECT_EQ(o.model.window_size(), 7);
  EXPECT_EQ(o.output_dir, "runs/x");
  EXPECT_FALSE(o.data.augment);

  EXPECT_THROW(make_config({}, {"optim.learning_rate=1"}), ConfigError);
  EXPECT_THROW(make_config({}, {"optim.lr=fast"}), ConfigError);
  EXPECT_THROW(make_config({}, {"optim.lr=-1"}), ConfigError);
  EXPECT_THROW(make_config({}, {"model.exposure_count=4"}), ConfigError);
  EXPECT_THROW(make_config({}, {"model.exposure_count=2.5"}), ConfigError);
  EXPECT_THROW(make_config({}, {"noequals"}), ConfigError);
  EXPECT_THROW(make_config(nlohmann::json::parse(R"({"extra": 1})")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ModelHash) {
  const auto a = model_config_hash(make_config());
  EXPECT_EQ(a.size(), 16u);
  EXPECT_EQ(a, model_config_hash(make_config({}, {"optim.lr=1e-3", "model.attention_tile=64"})));
  EXPECT_NE(a, model_config_hash(make_config({}, {"model.merge_blocks=4"})));
}

TEST(Checkpoint, RoundTripIsBitwise) {
  lt::TempDir dir("ckpt");
  const auto cfg = tiny_config(dir.path(), 0);
  torch::manual_seed(1);
  LanHdrNet a(cfg.model);
  const auto w = lt::synthetic_window(16, 16);
  const auto before = reconstruct(a, w);
  save_checkpoint(dir.path() / "a.pt", a, 42, model_config_hash(cfg));
  torch::manual_seed(2);
  LanHdrNet b(cfg.model);
  const auto info = load_checkpoint(dir.path() / "a.pt", b, model_config_hash(cfg));
  EXPECT_EQ(info.step, 42);
  EXPECT_FALSE(info.has_optimizer);
  EXPECT_TRUE(torch::equal(reconstruct(b, w), before));
  EXPECT_THROW(load_checkpoint(dir.path() / "a.pt", b, "0000000000000000"), ConfigError);
  EXPECT_THROW(read_checkpoint_info(dir.path() / "missing.pt"), DataError);
}

TEST(Trainer, ZeroStepsWritesInitialCheckpointOnly) {
  lt::TempDir dir("train0");
  Trainer t(tiny_config(dir.path(), 0), synthetic_source(1));
  t.run();
  std::vector<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(t.checkpoint_dir())) {
    names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"last.pt", "step_00000000.pt"}));
  EXPECT_EQ(read_checkpoint_info(t.checkpoint_dir() / "last.pt").step, 0);
}

TEST(Trainer, ResumeContinuesStepCounter) {
  lt::TempDir dir("resume");
  {
    Trainer t(tiny_config(dir.path(), 3), synthetic_source(1));
    t.run();
    EXPECT_EQ(t.current_step(), 3);
  }
  Trainer t(tiny_config(dir.path(), 5), synthetic_source(1));
  t.run();
  EXPECT_EQ(t.current_step(), 5);
  EXPECT_EQ(read_checkpoint_info(t.checkpoint_dir() / "last.pt").step, 5);
  EXPECT_TRUE(read_checkpoint_info(t.checkpoint_dir() / "last.pt").has_optimizer);
  std::ifstream log(dir.path() / "train_log.jsonl");
  std::string line;
  int lines = 0;
  int64_t last_step = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("loss") && j.contains("l1") && j.contains("lr"));
    last_step = j["step"];
    ++lines;
  }
  EXPECT_EQ(lines, 5);
  EXPECT_EQ(last_step, 5);
}

TEST(Trainer, DeterministicOverTenSteps) {
  lt::TempDir d1("det1"), d2("det2");
  Trainer a(tiny_config(d1.path(), 10), synthetic_source(3));
  Trainer b(tiny_config(d2.path(), 10), synthetic_source(3));
  a.run();
  b.run();
  const auto pa = parameter_snapshot(a.net()), pb = parameter_snapshot(b.net());
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(torch::equal(pa[i], pb[i]));
}

TEST(Trainer, DivergenceReportsLastGoodCheckpoint) {
  lt::TempDir dir("nan");
  torch::manual_seed(1);
  auto w = lt::synthetic_window(16, 16);
  w.ground_truth[0][0][0] = std::nan("");
  Trainer t(tiny_config(dir.path(), 3), [w] { return TrainingSample{w, std::nullopt}; });
  try {
    t.run();
    FAIL();
  } catch (const TrainingDivergenceError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("last.pt"), std::string::npos) << msg;
    EXPECT_NE(msg.find("l1"), std::string::npos) << msg;
  }
}

TEST(Trainer, PerceptualTermNeedsWeights) {
  lt::TempDir dir("vggcfg");
  auto cfg = tiny_config(dir.path(), 0);
  cfg.loss.weights.perceptual = 0.1;
  cfg.loss.vgg_weights = (dir.path() / "none.pt").string();
  EXPECT_THROW(Trainer(cfg, synthetic_source(1)), ConfigError);
  Vgg19Features vgg;
  torch::save(vgg, (dir.path() / "vgg.pt").string());
  cfg.loss.vgg_weights = (dir.path() / "vgg.pt").string();
  Trainer t(cfg, synthetic_source(1));
  const auto c = t.losses(synthetic_source(1)());
  EXPECT_TRUE(c.perceptual.defined());
  EXPECT_TRUE(c.temporal.defined());
}

TEST(ManifestSource, SharedCropAndAugmentation) {
  lt::TempDir dir("source");
  SequenceRecord r;
  r.id = "s";
  r.pattern = {2, 2.0, 0};
  torch::manual_seed(4);
  const auto clean = lt::texture(20, 24, 0.05, 0.6);
  for (int i = 0; i < 7; ++i) {
    const auto p = dir.path() / ("f" + std::to_string(i) + ".png");
    const auto g = dir.path() / ("g" + std::to_string(i) + ".exr");
    io::write_ldr(synthesize_exposure(clean, r.pattern.exposure(i)).pixels, p);
    io::write_hdr(synthetic_ground_truth(clean), g);
    r.frame_paths.push_back(p);
    r.ground_truth_paths.push_back(g);
  }
  auto cfg = tiny_config(dir.path(), 0);
  ManifestSampleSource src({r}, cfg);
  for (int i = 0; i < 5; ++i) {
    const auto s = src();
    ASSERT_TRUE(s.previous.has_value());
    EXPECT_EQ(s.current.height(), 16);
    EXPECT_EQ(s.previous->width(), 16);
    // Static scene: identical crop and augmentation give identical ground truth.
    EXPECT_TRUE(torch::equal(s.current.ground_truth, s.previous->ground_truth));
  }
  r.ground_truth_paths.clear();
  EXPECT_THROW(ManifestSampleSource({r}, cfg), DataError);
}

TEST(Inference, FrameCountsShapesAndNoGroundTruth) {
  lt::TempDir dir("infer");
  for (int exposures : {2, 3}) {
    SequenceRecord r;
    r.id = "e" + std::to_string(exposures);
    r.pattern = {exposures, 2.0, 0};
    for (int i = 0; i < r.pattern.window_size(); ++i) {
      const auto p = dir.path() / r.id / ("f" + std::to_string(i) + ".png");
      io::write_ldr(lt::texture(18, 26, 0.1, 0.9), p);
      r.frame_paths.push_back(p);
      r.ground_truth_paths.push_back(dir.path() / "does_not_exist.exr");
    }
    torch::manual_seed(5);
    LanHdrNet net(lt::small_model(exposures, 4));
    const auto written = infer_sequence(net, r, dir.path() / "out");
    ASSERT_EQ(written.size(), 1u);
    const auto hdr = io::read_hdr(written[0]);
    EXPECT_EQ(hdr.sizes(), (std::vector<int64_t>{3, 18, 26}));
    EXPECT_GT(hdr.min().item<float>(), 0.0f);
    EXPECT_LT(hdr.max().item<float>(), 1.0f);
    LanHdrNet wrong(lt::small_model(exposures == 2 ? 3 : 2, 4));
    EXPECT_THROW(infer_sequence(wrong, r, dir.path() / "out"), DataError);
  }
}

TEST(Inference, TiledMatchesShapeAndRange) {
  torch::manual_seed(6);
  LanHdrNet net(lt::small_model(2, 4));
  const auto w = lt::synthetic_window(50, 70);
  const auto whole = reconstruct(net, w);
  const auto tiled = reconstruct(net, w, 32, 8);
  EXPECT_EQ(whole.sizes(), (std::vector<int64_t>{3, 50, 70}));
  EXPECT_EQ(tiled.sizes(), whole.sizes());
  EXPECT_GT(tiled.min().item<float>(), 0.0f);
  EXPECT_LT(tiled.max().item<float>(), 1.0f);
  EXPECT_THROW(reconstruct(net, w, 30, 8), ConfigError);
}

TEST(Inference, Hd720RoundTripsShape) {
  torch::manual_seed(7);
  auto cfg = lt::small_model(2, 4);
  cfg.merge_blocks = 1;
  LanHdrNet net(cfg);
  std::vector<torch::Tensor> ldr;
  for (int i = 0; i < 5; ++i) ldr.push_back(lt::texture(720, 1280, 0.1, 0.9, 16));
  const auto w = make_window(ldr, {2, 2.0, 0}, 2);
  const auto out = reconstruct(net, w, 256, 32);
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{3, 720, 1280}));
}

TEST(Evaluate, DirectoriesAndErrors) {
  lt::TempDir dir("eval");
  torch::manual_seed(8);
  for (int i = 0; i < 3; ++i) {
    const auto f = torch::rand({3, 12, 12}) + 0.05;
    io::write_hdr(f, dir.path() / "gt" / ("f" + std::to_string(i) + ".exr"));
    io::write_hdr(f, dir.path() / "pred" / ("f" + std::to_string(i) + ".exr"));
  }
  const auto r = evaluate_directories(dir.path() / "pred", dir.path() / "gt");
  ASSERT_EQ(r.frames.size(), 3u);
  for (const auto& f : r.frames) {
    EXPECT_DOUBLE_EQ(f.ssim_t, 1.0);
    EXPECT_DOUBLE_EQ(f.ssim_pu, 1.0);
    EXPECT_TRUE(f.psnr_t.infinite);
  }
  std::filesystem::create_directories(dir.path() / "empty");
  EXPECT_THROW(evaluate_directories(dir.path() / "empty", dir.path() / "gt"), DataError);
  std::filesystem::remove(dir.path() / "pred" / "f2.exr");
  EXPECT_THROW(evaluate_directories(dir.path() / "pred", dir.path() / "gt"), DataError);
}

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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "test_support.hpp"

using namespace lanhdr;
namespace fs = std::filesystem;
namespace lt = lanhdr::testing;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LANHDR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

class CliWorkflow : public ::testing::Test {
 protected:
  void SetUp() override {
    torch::manual_seed(11);
    const auto base = lt::texture(24, 24, 0.05, 0.7, 3);
    for (int i = 0; i < 7; ++i) {
      io::write_ldr(torch::roll(base, {i}, {2}), dir.path() / "clean" / ("c" + std::to_string(i) + ".png"));
    }
    nlohmann::json cfg = {
        {"model", {{"kq_channels", 4}, {"value_channels", 4}, {"feature_channels", 4},
                   {"merge_channels", 4}, {"merge_blocks", 1}}},
        {"data", {{"manifest", (dir.path() / "data" / "manifest.json").string()},
                  {"crop", 16}, {"batch_size", 1}}},
        {"optim", {{"max_steps", 2}, {"log_every", 1}}},
        {"loss", {{"perceptual", 0.0}}},
        {"output_dir", (dir.path() / "run").string()}};
    std::ofstream(config()) << cfg.dump(2);
  }

  fs::path config() const { return dir.path() / "config.json"; }

  lt::TempDir dir{"cli"};
};

}  // namespace

TEST_F(CliWorkflow, SynthTrainInferEvalProfile) {
  ASSERT_EQ(run_cli("synth --clean " + q(dir.path() / "clean") + " --out " + q(dir.path() / "data")), 0);
  ASSERT_TRUE(fs::exists(dir.path() / "data" / "manifest.json"));
  const auto records = load_manifest(dir.path() / "data" / "manifest.json");
  ASSERT_EQ(records[0].length(), 7);
  EXPECT_TRUE(records[0].has_ground_truth());

  ASSERT_EQ(run_cli("train --config " + q(config())), 0);
  const auto ckpt = dir.path() / "run" / "checkpoints" / "last.pt";
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_EQ(read_checkpoint_info(ckpt).step, 2);

  ASSERT_EQ(run_cli("infer --config " + q(config()) + " --ckpt " + q(ckpt) + " --seq " +
                    q(dir.path() / "data" / "manifest.json") + " --out " + q(dir.path() / "pred")),
            0);
  const auto preds = io::list_images(dir.path() / "pred", io::hdr_extensions());
  ASSERT_EQ(preds.size(), 3u);  // t = 2, 3, 4
  EXPECT_EQ(preds[0].filename().string(), "synthetic_00002.exr");

  // Directory input with an explicit exposure schedule.
  ASSERT_EQ(run_cli("infer --config " + q(config()) + " --ckpt " + q(ckpt) + " --seq " +
                    q(dir.path() / "data" / "ldr") + " --stops 2 --phase 0 --out " +
                    q(dir.path() / "pred_dir")),
            0);
  EXPECT_EQ(io::list_images(dir.path() / "pred_dir", io::hdr_extensions()).size(), 3u);

  for (int t = 2; t <= 4; ++t) {
    fs::create_directories(dir.path() / "gt");
    fs::copy_file(records[0].ground_truth_paths[t], dir.path() / "gt" / records[0].ground_truth_paths[t].filename());
  }
  ASSERT_EQ(run_cli("eval --pred " + q(dir.path() / "pred") + " --gt " + q(dir.path() / "gt") +
                    " --out " + q(dir.path() / "report.json")),
            0);
  std::ifstream in(dir.path() / "report.json");
  const auto report = nlohmann::json::parse(in);
  EXPECT_EQ(report["summary"]["frame_count"], 3);
  EXPECT_EQ(report["frames"].size(), 3u);

  ASSERT_EQ(run_cli("profile --frames " + q(dir.path() / "pred") + " --row 5 --out " +
                    q(dir.path() / "profile.png")),
            0);
  const auto profile = io::read_frame(dir.path() / "profile.png");
  EXPECT_EQ(profile.sizes(), (std::vector<int64_t>{3, 3, 24}));
}

TEST_F(CliWorkflow, ExitCodes) {
  EXPECT_NE(run_cli(""), 0);
  EXPECT_NE(run_cli("train --config " + q(dir.path() / "missing.json")), 0);
  EXPECT_EQ(run_cli("train --config " + q(config()) + " --set optim.unknown=1"), 2);
  EXPECT_EQ(run_cli("train --config " + q(config())), 3);  // manifest not generated yet
  fs::create_directories(dir.path() / "e1");
  fs::create_directories(dir.path() / "e2");
  EXPECT_EQ(run_cli("eval --pred " + q(dir.path() / "e1") + " --gt " + q(dir.path() / "e2") +
                    " --out " + q(dir.path() / "r.json")),
            3);
  ASSERT_EQ(run_cli("synth --clean " + q(dir.path() / "clean") + " --out " + q(dir.path() / "data")), 0);
  ASSERT_EQ(run_cli("train --config " + q(config()) + " --set optim.max_steps=0"), 0);
  const auto ckpt = dir.path() / "run" / "checkpoints" / "last.pt";
  EXPECT_EQ(run_cli("infer --config " + q(config()) + " --set model.merge_blocks=2 --ckpt " + q(ckpt) +
                    " --seq " + q(dir.path() / "data" / "manifest.json") + " --out " +
                    q(dir.path() / "p")),
            2);
  EXPECT_EQ(run_cli("profile --frames " + q(dir.path() / "data" / "gt") + " --row 99 --out " +
                    q(dir.path() / "p.png")),
            4);
}

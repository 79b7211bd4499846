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

// Command-line front end: train, infer, eval, profile and synth.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lanhdr/lanhdr.hpp"

namespace fs = std::filesystem;
using namespace lanhdr;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string ckpt;
  std::string seq;
  std::string out;
  std::string pred;
  std::string gt;
  std::string frames;
  std::string clean;
  std::string id = "synthetic";
  int64_t row = 0;
  int exposures = 2;
  double stops = 2.0;
  int phase = 0;
  double mu = kDefaultMu;
};

RunConfig config_from(const Options& o) {
  if (o.config.empty()) return make_config(nlohmann::json::object(), o.overrides);
  return load_config(o.config, o.overrides);
}

int run_train(const Options& o) {
  auto cfg = config_from(o);
  if (cfg.data.manifest.empty()) throw ConfigError("data.manifest is not set");
  fs::path manifest = cfg.data.manifest;
  if (manifest.is_relative() && !o.config.empty() && !fs::exists(manifest)) {
    manifest = fs::path(o.config).parent_path() / manifest;
  }
  auto records = load_manifest(manifest);
  ManifestSampleSource source(std::move(records), cfg);
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream(fs::path(cfg.output_dir) / "config.json") << cfg.json.dump(2) << '\n';
  }
  Trainer trainer(cfg, std::ref(source));
  trainer.run(&std::cout);
  std::cout << "finished at step " << trainer.current_step() << ", checkpoints in "
            << trainer.checkpoint_dir() << '\n';
  return 0;
}

std::vector<SequenceRecord> sequences_from(const Options& o, const RunConfig& cfg) {
  const fs::path p = o.seq;
  if (fs::is_directory(p)) {
    SequenceRecord r;
    r.id = p.filename().string();
    r.frame_paths = io::list_images(p, io::ldr_extensions());
    r.pattern = ExposurePattern{cfg.model.exposure_count, o.stops, o.phase};
    r.validate();
    return {r};
  }
  auto records = load_manifest(p, false);
  for (auto& r : records) {
    r.ground_truth_paths.clear();  // inference never touches ground truth
    r.validate();
  }
  return records;
}

int run_infer(const Options& o) {
  auto cfg = config_from(o);
  configure_determinism(cfg);
  LanHdrNet net(cfg.model);
  const auto info = load_checkpoint(o.ckpt, net, model_config_hash(cfg));
  std::cout << "loaded " << o.ckpt << " (step " << info.step << ")\n";
  std::size_t count = 0;
  for (const auto& seq : sequences_from(o, cfg)) {
    const auto written = infer_sequence(net, seq, o.out, cfg.infer.tile, cfg.infer.tile_overlap);
    count += written.size();
    std::cout << seq.id << ": " << written.size() << " frame(s)\n";
  }
  std::cout << "wrote " << count << " HDR frame(s) to " << o.out << '\n';
  return 0;
}

int run_eval(const Options& o) {
  const auto report = evaluate_directories(o.pred, o.gt, TonemapParams{o.mu});
  const auto j = report.to_json();
  const fs::path out = o.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw DataError("cannot write report '" + out.string() + "'");
  f << j.dump(2) << '\n';
  std::cout << j.at("summary").dump() << '\n';
  return 0;
}

int run_profile(const Options& o) {
  const auto paths = io::list_images(o.frames, io::hdr_extensions());
  if (paths.empty()) throw DataError("profile: no HDR frames in '" + o.frames + "'");
  std::vector<torch::Tensor> frames;
  for (const auto& p : paths) frames.push_back(io::read_hdr(p).clamp_min(0.0));
  const auto profile = temporal_profile(frames, o.row, TonemapParams{o.mu});  // [T,W,3]
  io::write_ldr(profile.permute({2, 0, 1}), o.out);
  std::cout << "profile " << profile.size(0) << "x" << profile.size(1) << " -> " << o.out << '\n';
  return 0;
}

int run_synth(const Options& o) {
  const ExposurePattern pattern{o.exposures, o.stops, o.phase};
  pattern.validate();
  const auto cleans = io::list_images(o.clean, io::ldr_extensions());
  if (cleans.empty()) throw DataError("synth: no frames in '" + o.clean + "'");
  const fs::path out = o.out;
  SequenceRecord r;
  r.id = o.id;
  r.pattern = pattern;
  for (std::size_t i = 0; i < cleans.size(); ++i) {
    const auto clean = io::read_frame(cleans[i]);
    const auto ldr = synthesize_exposure(clean, pattern.exposure(static_cast<int>(i)));
    char name[32];
    std::snprintf(name, sizeof name, "%05zu", i);
    const auto ldr_path = out / "ldr" / (std::string(name) + ".png");
    const auto gt_path = out / "gt" / (std::string(name) + ".exr");
    io::write_ldr(ldr.pixels, ldr_path);
    io::write_hdr(synthetic_ground_truth(clean), gt_path);
    r.frame_paths.push_back(ldr_path);
    r.ground_truth_paths.push_back(gt_path);
  }
  save_manifest({r}, out / "manifest.json");
  std::cout << "wrote " << cleans.size() << " frames and " << (out / "manifest.json") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HDR video reconstruction from alternating-exposure LDR frames"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", o.config, "JSON run config")->required()->check(CLI::ExistingFile);
  train->add_option("--set", o.overrides, "Override a config value, e.g. optim.lr=2e-4");

  auto* infer = app.add_subcommand("infer", "Reconstruct HDR frames for a sequence");
  infer->add_option("--config", o.config, "JSON run config")->required()->check(CLI::ExistingFile);
  infer->add_option("--set", o.overrides, "Override a config value");
  infer->add_option("--ckpt", o.ckpt, "Checkpoint file")->required();
  infer->add_option("--seq", o.seq, "Manifest file or directory of LDR frames")->required();
  infer->add_option("--out", o.out, "Output directory")->required();
  infer->add_option("--stops", o.stops, "Exposure gap in stops (directory input)");
  infer->add_option("--phase", o.phase, "Exposure phase of frame 0 (directory input)");

  auto* eval = app.add_subcommand("eval", "Score predicted HDR frames against references");
  eval->add_option("--pred", o.pred, "Directory of predicted frames")->required();
  eval->add_option("--gt", o.gt, "Directory of reference frames")->required();
  eval->add_option("--out", o.out, "Report path (JSON)")->required();
  eval->add_option("--mu", o.mu, "mu-law compression parameter");

  auto* profile = app.add_subcommand("profile", "Temporal profile of one pixel row");
  profile->add_option("--frames", o.frames, "Directory of HDR frames")->required();
  profile->add_option("--row", o.row, "Row index")->required();
  profile->add_option("--out", o.out, "Output image")->required();
  profile->add_option("--mu", o.mu, "mu-law compression parameter");

  auto* synth = app.add_subcommand("synth", "Render an alternating-exposure sequence from clean frames");
  synth->add_option("--clean", o.clean, "Directory of clean frames")->required();
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--exposures", o.exposures, "2 or 3 alternating exposures");
  synth->add_option("--stops", o.stops, "Exposure gap in stops");
  synth->add_option("--phase", o.phase, "Exposure phase of frame 0");
  synth->add_option("--id", o.id, "Sequence id");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(o);
    if (*infer) return run_infer(o);
    if (*eval) return run_eval(o);
    if (*profile) return run_profile(o);
    if (*synth) return run_synth(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const c10::Error& e) {
    std::cerr << "error: " << e.what_without_backtrace() << '\n';
    return exit_code_for(ErrorCategory::kRuntime);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(ErrorCategory::kRuntime);
  }
  return 1;
}

/* Copyright 2026 The AMNKit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// Command-line driver for the three-stage pipeline and its experiments.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "amnkit/pipeline/pipeline.hpp"

namespace {

using amnkit::pipeline::Pipeline;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"amnkit: threshold-robust weakly supervised segmentation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "amnkit_out";
  int workers = 1;
  app.add_option("--config", config_path, "Config file of 'key = value' lines")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out_dir, "Artifact directory")->capture_default_str();
  app.add_option("--workers", workers, "Worker threads for per-image work")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  auto* stage1 = app.add_subcommand("stage1", "Train the classifier, compute CAMs and seeds");
  auto* stage2 = app.add_subcommand("stage2", "Train the AMN and produce pseudo-masks");
  auto* stage3 = app.add_subcommand("stage3", "Train the segmentation network on pseudo-masks");
  auto* sweep = app.add_subcommand("sweep", "mIoU over thresholds and activation statistics");
  auto* ablate = app.add_subcommand("ablate", "CAM / +PCL / +PCL+LC ablation");
  auto* lc = app.add_subcommand("lc-ablate", "Label conditioning placement and encoding");
  std::string table = "both";
  lc->add_option("--table", table, "placement, encoding or both")
      ->check(CLI::IsMember({"placement", "encoding", "both"}))
      ->capture_default_str();
  auto* hist = app.add_subcommand("hist", "Foreground activation and optimal-threshold histograms");
  auto* eval = app.add_subcommand("eval", "Evaluate the available stage outputs");

  CLI11_PARSE(app, argc, argv);

  try {
    amnkit::pipeline::PipelineConfig cfg;
    if (!config_path.empty()) cfg = amnkit::pipeline::LoadConfig(config_path);
    if (seed) cfg.seed = *seed;
    Pipeline p(cfg, out_dir, workers, &std::cerr);

    if (gen->parsed()) p.GenerateData();
    if (stage1->parsed()) p.RunStage1();
    if (stage2->parsed()) p.RunStage2();
    if (stage3->parsed()) p.RunStage3();
    if (sweep->parsed()) {
      const auto r = p.ThresholdSweepExperiment();
      std::cout << r.csv.string() << "\n" << r.stats_csv.string() << "\n";
    }
    if (ablate->parsed()) std::cout << p.Ablation().csv.string() << "\n";
    if (lc->parsed()) {
      if (table != "encoding") std::cout << p.LcPlacementAblation().csv.string() << "\n";
      if (table != "placement") std::cout << p.LcEncodingAblation().csv.string() << "\n";
    }
    if (hist->parsed()) {
      const auto r = p.ActivationHistogram();
      std::cout << r.csv.string() << "\n" << r.tau_csv.string() << "\n";
    }
    if (eval->parsed()) std::cout << p.Evaluate().csv.string() << "\n";
  } catch (const amnkit::pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

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
// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "amnkit/amn/amn.hpp"
#include "amnkit/cam/cam.hpp"
#include "amnkit/evalkit/evalkit.hpp"
#include "amnkit/pipeline/pipeline.hpp"
#include "amnkit/refine/crf.hpp"
#include "amnkit/tensorops/ops.hpp"
#include "oracles.hpp"
#include "testing.hpp"

namespace amnkit {
namespace {

namespace fs = std::filesystem;
using namespace amnkit::testing;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string Fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, a, b, c, d);
  return buf;
}

const BackboneSpec kSmall{3, {4, 6, 8, 8}, {1, 2, 2, 2}};

Outcome GradientChecks() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  {
    Var x = Var::Parameter(RandomTensor({6, 6, 3}, rng));
    Var k = Var::Parameter(RandomTensor({3, 3, 3, 4}, rng));
    const Tensor w = RandomTensor({3, 3, 4}, rng);
    const auto loss = [&] {
      return ops::Sum(ops::Mul(ops::Conv2d(x, k, {.stride = 2, .dilation = 1, .padding = 1}),
                               Var::Constant(w)));
    };
    worst = std::max(worst, GradCheck({x, k}, loss));
  }
  {
    Var logits = Var::Parameter(RandomTensor({4, 4, 5}, rng, -3, 3));
    const Tensor w = RandomTensor({8, 8, 5}, rng);
    const auto loss = [&] {
      return ops::Sum(ops::Mul(ops::BilinearUpsample(ops::SoftmaxChannels(logits), 8, 8),
                               Var::Constant(w)));
    };
    worst = std::max(worst, GradCheck({logits}, loss));
  }
  {
    ClassifierNet net(3, 102, kSmall);
    const Tensor image = RandomTensor({16, 16, 3}, rng, 0, 1);
    const std::vector<double> targets{1, 0, 1};
    const auto loss = [&] {
      return ops::SigmoidCrossEntropy(net.Scores(net.Features(Var::Constant(image))), targets);
    };
    worst = std::max(worst, GradCheck(ParameterVars(net.NamedParameters()), loss));
  }
  {
    amn::AmnSpec spec;
    spec.num_classes = 3;
    spec.backbone = kSmall;
    spec.aspp_channels = 4;
    const amn::AmnNet net(spec, 103);
    const Tensor image = RandomTensor({16, 16, 3}, rng, 0, 1);
    const amn::SmoothedTarget t = amn::SmoothTarget(RandomMask(16, 16, 4, rng, 0.2), 0.4, 4);
    const Var code = Var::Constant(amn::EncoderInput({1, 0, 1}, amn::LcInput::kLabel, 0, ""));
    const std::vector<std::uint8_t> fg{1, 3};
    const auto loss = [&] {
      return amn::PclLoss(net.Forward(Var::Constant(image), code), t, fg);
    };
    worst = std::max(worst, GradCheck(ParameterVars(net.NamedParameters()), loss));
  }
  return {worst < 1e-4, Fmt("worst relative gradient error %.2e (limit 1e-4)", worst)};
}

Outcome OracleChecks() {
  std::mt19937_64 rng(201);
  const int n = 100;
  int failures = 0;
  double crf_err = 0.0;
  for (int i = 0; i < n; ++i) {
    const SegMask gt = RandomMask(16, 16, 4, rng, 0.1);
    const SegMask pred = RandomMask(16, 16, 4, rng);
    const auto labels = eval::AllLabels(3);
    const eval::MiouResult r = eval::Miou(pred, gt, labels);
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (r.per_class[k] != OracleIou(pred, gt, labels[k])) ++failures;
    }
    if (std::abs(r.miou - OracleMiou(pred, gt, labels)) > 1e-12) ++failures;

    const ActivationMap m = RandomNormalizedMap(12, 12, {0, 2}, rng);
    const double tau = (i % 21) * 0.05;
    if (eval::ThresholdMask(m, tau) != OracleThresholdMask(m, tau)) ++failures;

    const Tensor f = RandomTensor({4, 4, 8}, rng);
    const Tensor code = RandomTensor({8}, rng);
    const Tensor out = amn::LabelCondition(Var::Constant(f), Var::Constant(code)).value();
    for (std::size_t p = 0; p < 16; ++p) {
      for (std::size_t q = 0; q < 8; ++q) {
        if (out[p * 8 + q] != f[p * 8 + q] * code[q]) ++failures;
      }
    }

    refine::CrfConfig cfg;
    cfg.iterations = 1;
    const Tensor image = RandomTensor({8, 8, 3}, rng, 0, 1);
    const Tensor unary = RandomDistribution(8, 8, 2 + i % 3, rng);
    const Tensor got = refine::CrfRefine(image, unary, cfg);
    const Tensor want = OracleCrfIteration(image, unary, cfg);
    for (std::size_t k = 0; k < got.size(); ++k) {
      crf_err = std::max(crf_err, std::abs(got[k] - want[k]));
    }
  }
  for (int i = 0; i < n; ++i) {
    const ActivationMap m = RandomNormalizedMap(12, 12, {0, 2}, rng);
    const SegMask gt = RandomMask(12, 12, 4, rng, 0.05);
    const auto [tau, miou] = OracleOptimalThreshold(m, gt, 20);
    const eval::ThresholdChoice c = eval::OptimalThreshold(m, gt, 0.05);
    if (std::abs(c.tau - tau) > 1e-9 || std::abs(c.miou - miou) > 1e-12) ++failures;
  }
  const bool pass = failures == 0 && crf_err < 1e-9;
  return {pass, Fmt("%.0f instances per function, %.0f mismatches, max CRF error %.1e",
                    n, failures, crf_err)};
}

Outcome DistributionChecks() {
  std::mt19937_64 rng(301);
  double worst = 0.0;
  auto check = [&](const Tensor& t, bool skip_zero_rows) {
    const std::size_t l = t.extent(2);
    for (std::size_t p = 0; p < t.size() / l; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < l; ++k) s += t[p * l + k];
      if (skip_zero_rows && s == 0.0) continue;
      worst = std::max(worst, std::abs(s - 1.0));
    }
  };
  for (int i = 0; i < 100; ++i) {
    check(ops::SoftmaxChannels(Var::Constant(RandomTensor({8, 8, 5}, rng, -50, 50))).value(),
          false);
    check(amn::SmoothTarget(RandomMask(8, 8, 5, rng, 0.2), 0.4, 5).dist, true);
    check(refine::CrfRefine(RandomTensor({10, 10, 3}, rng, 0, 1),
                            RandomDistribution(10, 10, 4, rng), refine::CrfConfig{}),
          false);
  }
  return {worst <= 1e-6, Fmt("max |sum - 1| = %.2e (limit 1e-6)", worst)};
}

Outcome TwoLevelChecks() {
  std::mt19937_64 rng(401);
  // Normalized two-level maps peak at 1; the low level is drawn from [0, 0.99].
  std::uniform_int_distribution<int> level(0, 99);
  const auto grid = eval::ThresholdGrid(0.01);
  int violations = 0, cases = 0;
  for (int i = 0; i < 50; ++i) {
    const double lo = level(rng) / 100.0, hi = 1.0;
    const SegMask gt = RandomMask(16, 16, 2, rng);
    ActivationMap m;
    m.values = Tensor({16, 16, 1});
    m.classes = {0};
    for (std::size_t p = 0; p < 256; ++p) m.values[p] = gt.labels[p] == 1 ? hi : lo;
    m.normalized = true;
    bool have_ref = false;
    SegMask ref_mask;
    double ref_miou = -1;
    for (double tau : grid) {
      if (!(tau > lo && tau < hi)) continue;
      const SegMask mask = eval::ThresholdMask(m, tau);
      const double miou = eval::Miou(mask, gt, eval::AllLabels(1)).miou;
      ++cases;
      if (!have_ref) {
        have_ref = true;
        ref_mask = mask;
        ref_miou = miou;
      } else if (mask != ref_mask || miou != ref_miou) {
        ++violations;
      }
    }
  }
  return {violations == 0, Fmt("%.0f thresholds checked, %.0f differ", cases, violations)};
}

struct Experiments {
  pipeline::AblationResult ablation;
  pipeline::TableResult placement, encoding;
  pipeline::SweepResult sweep;
};

Experiments RunDefault(const fs::path& dir, int workers) {
  pipeline::Pipeline p(pipeline::PipelineConfig{}, dir, workers, &std::cerr);
  p.GenerateData();
  p.RunStage1();
  Experiments e;
  e.ablation = p.Ablation();
  e.placement = p.LcPlacementAblation();
  e.encoding = p.LcEncodingAblation();
  e.sweep = p.ThresholdSweepExperiment();
  return e;
}

std::map<std::string, std::string> ResultCsvs(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(root / "results")) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    out[e.path().filename().string()] = buf.str();
  }
  return out;
}

Outcome DeterminismCheck(const fs::path& base, int workers) {
  pipeline::PipelineConfig cfg;
  cfg.num_train = 24;
  cfg.num_val = 8;
  cfg.cls_epochs = 3;
  cfg.amn_epochs = 1;
  cfg.aspp_channels = 16;
  cfg.seg_epochs = 1;
  cfg.crf.iterations = 3;
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"det_a", "det_b"}) {
    pipeline::Pipeline p(cfg, base / name, workers, nullptr);
    p.GenerateData();
    p.RunStage1();
    p.RunStage2();
    p.Ablation();
    p.LcEncodingAblation();
    p.ThresholdSweepExperiment();
    p.ActivationHistogram();
    p.Evaluate();
    runs.push_back(ResultCsvs(base / name));
  }
  const bool same = runs[0] == runs[1] && !runs[0].empty();
  return {same, Fmt("%.0f result CSVs compared across two fresh runs, ", runs[0].size()) +
                    (same ? "byte-identical" : "differ")};
}

}  // namespace
}  // namespace amnkit

int main() {
  using namespace amnkit;
  const auto start = std::chrono::steady_clock::now();
  const int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const fs::path base = fs::temp_directory_path() / "amnkit_acceptance";
  fs::remove_all(base);

  std::map<int, Outcome> results;
  auto guarded = [&](int id, const std::function<Outcome()>& fn) {
    try {
      results[id] = fn();
    } catch (const std::exception& e) {
      results[id] = {false, std::string("exception: ") + e.what()};
    }
  };
  guarded(1, GradientChecks);
  guarded(2, OracleChecks);
  guarded(3, DistributionChecks);
  guarded(4, TwoLevelChecks);

  Experiments e;
  bool ran = false;
  std::string error;
  try {
    e = RunDefault(base / "default", workers);
    ran = true;
  } catch (const std::exception& ex) {
    error = std::string("exception: ") + ex.what();
  }
  auto experiment = [&](int id, const std::function<Outcome()>& fn) {
    if (ran) {
      guarded(id, fn);
    } else {
      results[id] = {false, error};
    }
  };
  experiment(5, [&] {
    const auto& a = e.ablation;
    const bool pass = a.cam_pcl - a.cam >= 0.01 && a.cam_pcl_lc - a.cam_pcl >= 0.01;
    return Outcome{pass, Fmt("CAM %.4f < CAM+PCL %.4f < CAM+PCL+LC %.4f (steps >= 0.01)",
                             a.cam, a.cam_pcl, a.cam_pcl_lc)};
  });
  experiment(6, [&] {
    const auto& s = e.sweep;
    const double cs = s.cam.Spread(), as = s.amn.Spread();
    const double cp = s.cam.Peak(), ap = s.amn.Peak();
    const bool pass = as <= 0.5 * cs && ap >= cp;
    return Outcome{pass, Fmt("spread AMN %.3f vs CAM %.3f (need <= half), peak AMN %.3f vs "
                             "CAM %.3f",
                             as, cs, ap, cp)};
  });
  experiment(7, [&] {
    const auto& s = e.sweep;
    const bool pass = s.amn_stats.fg_std < s.cam_stats.fg_std && s.amn_stats.gap > s.cam_stats.gap;
    return Outcome{pass, Fmt("fg_std AMN %.4f vs CAM %.4f, gap AMN %.4f vs CAM %.4f",
                             s.amn_stats.fg_std, s.cam_stats.fg_std, s.amn_stats.gap,
                             s.cam_stats.gap)};
  });
  experiment(8, [&] {
    const double b1 = e.placement.Get("lc1-label"), b4 = e.placement.Get("lc4-label");
    return Outcome{b4 - b1 >= 0.03,
                   Fmt("block 4 %.4f vs block 1 %.4f, margin %.2f points (need 3)", b4, b1,
                       100 * (b4 - b1))};
  });
  experiment(9, [&] {
    const double label = e.encoding.Get("lc4-label"), noise = e.encoding.Get("lc4-noise");
    const double ones = e.encoding.Get("lc4-ones"), nolc = e.encoding.Get("nolc");
    const double tol = 0.005;
    const bool pass = label >= noise - tol && noise >= ones - tol &&
                      std::abs(ones - nolc) <= tol;
    return Outcome{pass, Fmt("label %.4f, noise %.4f, ones %.4f, no LC %.4f", label, noise,
                             ones, nolc)};
  });
  guarded(10, [&] { return DeterminismCheck(base, workers); });

  bool all = true;
  for (const auto& [id, o] : results) {
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << "\n";
    all = all && o.pass;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "elapsed " << static_cast<int>(secs) << " s\n";
  fs::remove_all(base);
  return all ? 0 : 1;
}

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
#include "amnkit/evalkit/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "testing.hpp"

namespace amnkit::eval {
namespace {

using testing::OracleIou;
using testing::OracleOptimalThreshold;
using testing::OracleThresholdMask;
using testing::RandomMask;
using testing::RandomNormalizedMap;

ActivationMap Constant(std::size_t h, std::size_t w, double v) {
  ActivationMap m;
  m.values = Tensor({h, w, 1}, v);
  m.classes = {0};
  m.normalized = true;
  return m;
}

// Single-class map taking `lo` off the ground-truth object and `hi` on it.
ActivationMap TwoLevel(const SegMask& gt, double lo, double hi) {
  ActivationMap m;
  m.values = Tensor({gt.height, gt.width, 1});
  for (std::size_t p = 0; p < gt.size(); ++p) m.values[p] = gt.labels[p] == 1 ? hi : lo;
  m.classes = {0};
  m.normalized = SatisfiesNormalizedInvariant(m.values);
  return m;
}

SegMask Disk(std::size_t size, double cx, double cy, double r) {
  SegMask m(size, size);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r * r) m.at(y, x) = 1;
    }
  }
  return m;
}

TEST(ThresholdMaskTest, TauOneIsAllBackground) {
  std::mt19937_64 rng(1);
  const SegMask mask = ThresholdMask(RandomNormalizedMap(8, 8, {0, 1}, rng), 1.0);
  for (auto v : mask.labels) EXPECT_EQ(v, kBackgroundLabel);
}

TEST(ThresholdMaskTest, ActivationAboveTauIsForeground) {
  ActivationMap m = Constant(4, 4, 0.6);
  m.values[0] = 1.0;
  const SegMask mask = ThresholdMask(m, 0.5);
  for (auto v : mask.labels) EXPECT_EQ(v, 1);
  EXPECT_THROW(ThresholdMask(m, 1.5), std::invalid_argument);
  m.normalized = false;
  EXPECT_THROW(ThresholdMask(m, 0.5), std::invalid_argument);
}

TEST(ThresholdMaskTest, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> tau_dist(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const ActivationMap m = RandomNormalizedMap(16, 16, {0, 1, 2}, rng);
    const double tau = trial % 2 ? tau_dist(rng) : std::round(tau_dist(rng) * 20) / 20;
    ASSERT_EQ(ThresholdMask(m, tau), OracleThresholdMask(m, tau)) << tau;
  }
}

TEST(ThresholdMaskTest, ForegroundShrinksAsTauGrows) {
  std::mt19937_64 rng(3);
  const ActivationMap m = RandomNormalizedMap(16, 16, {0, 1}, rng);
  std::size_t prev = m.values.size() + 1;
  for (double tau : ThresholdGrid(0.05)) {
    const SegMask mask = ThresholdMask(m, tau);
    const auto fg = static_cast<std::size_t>(
        std::count_if(mask.labels.begin(), mask.labels.end(), [](auto v) { return v != 0; }));
    EXPECT_LE(fg, prev);
    prev = fg;
  }
}

TEST(IouTest, ClosedFormCases) {
  SegMask gt(2, 4);
  gt.labels = {1, 1, 0, 0, 1, 1, 0, 0};
  EXPECT_EQ(Iou(gt, gt, 1), 1.0);
  SegMask disjoint(2, 4);
  disjoint.labels = {0, 0, 1, 1, 0, 0, 1, 1};
  EXPECT_EQ(Iou(disjoint, gt, 1), 0.0);
  SegMask superset(2, 4);
  superset.labels = {1, 1, 1, 1, 1, 1, 1, 1};
  EXPECT_EQ(Iou(superset, gt, 1), 0.5);
  SegMask half(2, 4);
  half.labels = {0, 1, 1, 0, 0, 1, 1, 0};
  EXPECT_DOUBLE_EQ(Iou(half, gt, 1), 1.0 / 3.0);
}

TEST(IouTest, EmptyUnionScoresOneAndIsReported) {
  const SegMask a(3, 3), b(3, 3);
  bool empty = false;
  EXPECT_EQ(Iou(a, b, 2, &empty), 1.0);
  EXPECT_TRUE(empty);
  const MiouResult r = Miou(a, b, AllLabels(2));
  EXPECT_EQ(r.empty_union, (std::vector<std::uint8_t>{1, 2}));
  EXPECT_EQ(r.miou, 1.0);
}

TEST(IouTest, IgnoresUndefinedGroundTruth) {
  SegMask gt(1, 4), pred(1, 4);
  gt.labels = {1, 255, 0, 255};
  pred.labels = {1, 1, 0, 1};
  EXPECT_EQ(Iou(pred, gt, 1), 1.0);
  EXPECT_THROW(Miou(pred, SegMask(2, 2), AllLabels(1)), ShapeError);
}

TEST(MiouTest, MatchesLoopOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const SegMask gt = RandomMask(16, 16, 4, rng, 0.1);
    const SegMask pred = RandomMask(16, 16, 4, rng);
    const auto labels = AllLabels(3);
    const MiouResult r = Miou(pred, gt, labels);
    double sum = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double want = OracleIou(pred, gt, labels[i]);
      ASSERT_NEAR(r.per_class[i], want, 1e-12);
      sum += want;
    }
    ASSERT_NEAR(r.miou, sum / 4.0, 1e-12);
  }
}

TEST(IouAccumulatorTest, SingleImageEqualsMiou) {
  std::mt19937_64 rng(5);
  const SegMask gt = RandomMask(10, 10, 3, rng, 0.1);
  const SegMask pred = RandomMask(10, 10, 3, rng);
  IouAccumulator acc(2);
  acc.Add(pred, gt);
  EXPECT_NEAR(acc.Miou(), Miou(pred, gt, AllLabels(2)).miou, 1e-12);
}

TEST(OptimalThresholdTest, TwoLevelMapPicksSmallestPerfectTau) {
  const SegMask gt = Disk(16, 8, 8, 4);
  const ThresholdChoice c = OptimalThreshold(TwoLevel(gt, 0.3, 1.0), gt);
  EXPECT_NEAR(c.tau, 0.3, 1e-9);
  EXPECT_EQ(c.miou, 1.0);
}

TEST(OptimalThresholdTest, HalfStrengthObjectNeedsTauBelowHalf) {
  const SegMask gt = Disk(16, 8, 8, 4);
  ActivationMap m = TwoLevel(gt, 0.0, 0.5);
  m.values.at(8, 8, 0) = 1.0;
  m.normalized = true;
  const ThresholdChoice c = OptimalThreshold(m, gt);
  EXPECT_LT(c.tau, 0.5);
  EXPECT_EQ(c.miou, 1.0);
}

TEST(OptimalThresholdTest, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const ActivationMap m = RandomNormalizedMap(12, 12, {0, 2}, rng);
    const SegMask gt = RandomMask(12, 12, 4, rng, 0.05);
    const auto [best_tau, best] = OracleOptimalThreshold(m, gt, 20);
    const ThresholdChoice c = OptimalThreshold(m, gt, 0.05);
    ASSERT_NEAR(c.tau, best_tau, 1e-9);
    ASSERT_NEAR(c.miou, best, 1e-12);
  }
  EXPECT_THROW(OptimalThreshold(Constant(2, 2, 1.0), SegMask(2, 2), 0.03),
               std::invalid_argument);
}

TEST(SweepTest, SingleImageBestEqualsOptimalThreshold) {
  std::mt19937_64 rng(7);
  const std::vector<ActivationMap> maps{RandomNormalizedMap(16, 16, {0, 1}, rng)};
  const std::vector<SegMask> gts{RandomMask(16, 16, 3, rng)};
  const auto taus = ThresholdGrid(0.01);
  const ThresholdSweep s = Sweep(maps, gts, taus, 2);
  const ThresholdChoice c = OptimalThreshold(maps[0], gts[0]);
  EXPECT_NEAR(s.Peak(), c.miou, 1e-12);
  const auto it = std::find(s.taus.begin(), s.taus.end(), c.tau);
  ASSERT_NE(it, s.taus.end());
  EXPECT_NEAR(s.miou_per_tau[it - s.taus.begin()], c.miou, 1e-12);
}

TEST(SweepTest, TwoLevelMapsAreFlatBetweenLevels) {
  std::vector<ActivationMap> maps;
  std::vector<SegMask> gts;
  for (int i = 0; i < 4; ++i) {
    gts.push_back(Disk(16, 5 + i, 7, 3 + i));
    maps.push_back(TwoLevel(gts.back(), 0.2, 1.0));
  }
  const auto taus = TauRange(0.25, 0.95, 0.05);
  const ThresholdSweep s = Sweep(maps, gts, taus, 1, 2);
  for (double v : s.miou_per_tau) EXPECT_EQ(v, s.miou_per_tau.front());
  EXPECT_EQ(s.Spread(), 0.0);
  EXPECT_EQ(s.Peak(), 1.0);
}

TEST(SweepTest, WorkerCountDoesNotChangeResult) {
  std::mt19937_64 rng(8);
  std::vector<ActivationMap> maps;
  std::vector<SegMask> gts;
  for (int i = 0; i < 6; ++i) {
    maps.push_back(RandomNormalizedMap(8, 8, {0, 1, 2}, rng));
    gts.push_back(RandomMask(8, 8, 4, rng));
  }
  const auto taus = ThresholdGrid(0.1);
  EXPECT_EQ(Sweep(maps, gts, taus, 3, 1).miou_per_tau, Sweep(maps, gts, taus, 3, 3).miou_per_tau);
}

TEST(GridTest, Endpoints) {
  const auto g = ThresholdGrid(0.25);
  EXPECT_EQ(g, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
  const auto r = TauRange(0.1, 0.3, 0.1);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r.back(), 0.3, 1e-12);
}

TEST(ActivationStatsTest, TwoLevelMap) {
  const SegMask gt = Disk(16, 8, 8, 5);
  const ActivationStats st = ComputeActivationStats(TwoLevel(gt, 0.0, 1.0), 0, gt, 1);
  EXPECT_EQ(st.fg_std, 0.0);
  EXPECT_EQ(st.gap, 1.0);
  EXPECT_GT(st.fg_pixels, 0u);
  EXPECT_EQ(st.fg_pixels + st.bg_pixels, 256u);
}

TEST(ActivationStatsTest, ConstantMapHasNoGap) {
  const SegMask gt = Disk(16, 8, 8, 5);
  const ActivationStats st = ComputeActivationStats(Constant(16, 16, 0.5), 0, gt, 1);
  EXPECT_EQ(st.gap, 0.0);
  EXPECT_EQ(st.fg_mean, 0.5);
}

TEST(HistogramTest, CountsAndClamping) {
  const std::vector<double> v{-1.0, 0.0, 0.1, 0.5, 0.99, 1.0, 2.0};
  EXPECT_EQ(Histogram(v, 2), (std::vector<std::size_t>{3, 4}));
}

TEST(ChartTest, SvgDocuments) {
  const std::vector<Series> series{{"a", {0, 1}, {0.2, 0.8}}};
  const std::string line = LineChartSvg("t", "x", "y", series);
  EXPECT_EQ(line.rfind("<svg", 0), 0u);
  EXPECT_NE(line.find("</svg>"), std::string::npos);
  const std::vector<std::string> labels{"p", "q"};
  const std::vector<double> values{0.3, 0.6};
  EXPECT_NE(BarChartSvg("t", labels, values).find("</svg>"), std::string::npos);
}

}  // namespace
}  // namespace amnkit::eval

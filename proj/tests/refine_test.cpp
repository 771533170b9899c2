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
#include "amnkit/refine/crf.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "testing.hpp"

namespace amnkit::refine {
namespace {

using testing::OracleCrfIteration;
using testing::RandomDistribution;
using testing::RandomTensor;

TEST(CrfRefineTest, ZeroWeightsReturnUnary) {
  std::mt19937_64 rng(1);
  const Tensor image = RandomTensor({8, 8, 3}, rng, 0, 1);
  const Tensor unary = RandomDistribution(8, 8, 4, rng);
  CrfConfig cfg;
  cfg.w_appearance = 0;
  cfg.w_smoothness = 0;
  const Tensor out = CrfRefine(image, unary, cfg);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], unary[i], 1e-12);
  EXPECT_EQ(ArgmaxMask(out).labels, ArgmaxMask(unary).labels);
}

TEST(CrfRefineTest, IsolatedFlippedPixelJoinsNeighbours) {
  const Tensor image({10, 10, 3}, 0.5);
  Tensor unary({10, 10, 2});
  for (std::size_t p = 0; p < 100; ++p) {
    unary[p * 2] = 0.8;
    unary[p * 2 + 1] = 0.2;
  }
  unary[55 * 2] = 0.4;
  unary[55 * 2 + 1] = 0.6;
  const SegMask mask = ArgmaxMask(CrfRefine(image, unary, CrfConfig{}));
  for (auto v : mask.labels) EXPECT_EQ(v, 0);
}

TEST(CrfRefineTest, OneIterationMatchesBruteForceTwoLabels) {
  std::mt19937_64 rng(2);
  CrfConfig cfg;
  cfg.iterations = 1;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor image = RandomTensor({8, 8, 3}, rng, 0, 1);
    const Tensor unary = RandomDistribution(8, 8, 2, rng);
    const Tensor got = CrfRefine(image, unary, cfg);
    const Tensor want = OracleCrfIteration(image, unary, cfg);
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9);
  }
}

TEST(CrfRefineTest, OneIterationMatchesBruteForce16x16) {
  std::mt19937_64 rng(3);
  CrfConfig cfg;
  cfg.iterations = 1;
  cfg.theta_alpha = 5.0;
  cfg.theta_beta = 0.3;
  const Tensor image = RandomTensor({16, 16, 3}, rng, 0, 1);
  const Tensor unary = RandomDistribution(16, 16, 5, rng);
  const Tensor got = CrfRefine(image, unary, cfg);
  const Tensor want = OracleCrfIteration(image, unary, cfg);
  for (std::size_t i = 0; i < got.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-9);
}

TEST(CrfRefineTest, OutputIsDistribution) {
  std::mt19937_64 rng(4);
  const Tensor image = RandomTensor({12, 12, 3}, rng, 0, 1);
  const Tensor out = CrfRefine(image, RandomDistribution(12, 12, 3, rng), CrfConfig{});
  for (std::size_t p = 0; p < 144; ++p) {
    const double s = out[p * 3] + out[p * 3 + 1] + out[p * 3 + 2];
    EXPECT_NEAR(s, 1.0, 1e-6);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_GE(out[p * 3 + k], 0.0);
  }
}

TEST(CrfRefineTest, TraceRecordsEveryIteration) {
  std::mt19937_64 rng(5);
  const Tensor image = RandomTensor({8, 8, 3}, rng, 0, 1);
  CrfTrace trace;
  CrfRefine(image, RandomDistribution(8, 8, 3, rng), CrfConfig{}, &trace);
  EXPECT_EQ(trace.linf_change.size(), 10u);
}

TEST(CrfRefineTest, ManyMatchesIndividualCalls) {
  std::mt19937_64 rng(6);
  const Tensor image = RandomTensor({10, 10, 3}, rng, 0, 1);
  const std::vector<Tensor> unaries{RandomDistribution(10, 10, 2, rng),
                                    RandomDistribution(10, 10, 4, rng)};
  const auto many = CrfRefineMany(image, unaries, CrfConfig{});
  ASSERT_EQ(many.size(), 2u);
  for (std::size_t b = 0; b < 2; ++b) {
    const Tensor one = CrfRefine(image, unaries[b], CrfConfig{});
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(many[b][i], one[i], 1e-12);
  }
  EXPECT_TRUE(CrfRefineMany(image, {}, CrfConfig{}).empty());
}

TEST(CrfRefineTest, RejectsInvalidInputs) {
  const Tensor image({4, 4, 3}, 0.5);
  Tensor bad({4, 4, 2}, 0.3);
  EXPECT_THROW(CrfRefine(image, bad, CrfConfig{}), std::invalid_argument);
  EXPECT_THROW(CrfRefine(image, Tensor({3, 4, 2}, 0.5), CrfConfig{}), ShapeError);
  CrfConfig cfg;
  cfg.iterations = 0;
  EXPECT_THROW(CrfRefine(image, Tensor({4, 4, 2}, 0.5), cfg), std::invalid_argument);
  cfg = CrfConfig{};
  cfg.theta_beta = 0;
  EXPECT_THROW(Validate(cfg), std::invalid_argument);
  cfg = CrfConfig{};
  cfg.confidence_threshold = 1.0;
  EXPECT_THROW(Validate(cfg), std::invalid_argument);
}

TEST(MakeSeedTest, ConfidentPixelTakesArgmaxLabel) {
  CrfConfig cfg;
  cfg.confidence_threshold = 0.5;
  const Tensor probs({1, 1, 2}, std::vector<double>{0.9, 0.1});
  EXPECT_EQ(MakeSeed(probs, cfg).labels[0], 0);
}

TEST(MakeSeedTest, LowConfidencePixelIsUndefined) {
  CrfConfig cfg;
  cfg.confidence_threshold = 0.6;
  const Tensor probs({1, 1, 2}, std::vector<double>{0.5, 0.5});
  EXPECT_EQ(MakeSeed(probs, cfg).labels[0], kUndefinedLabel);
}

TEST(MakeSeedTest, MatchesPerPixelOracle) {
  std::mt19937_64 rng(7);
  CrfConfig cfg;
  const std::vector<int> classes{0, 2};
  const auto labels = ChannelLabels(classes);
  EXPECT_EQ(labels, (std::vector<std::uint8_t>{0, 1, 3}));
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor probs = RandomDistribution(16, 16, 3, rng);
    const SegMask seed = MakeSeed(probs, cfg, labels);
    for (std::size_t p = 0; p < 256; ++p) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < 3; ++k) {
        if (probs[p * 3 + k] > probs[p * 3 + best]) best = k;
      }
      const std::uint8_t want =
          probs[p * 3 + best] >= cfg.confidence_threshold ? labels[best] : kUndefinedLabel;
      ASSERT_EQ(seed.labels[p], want);
    }
  }
  EXPECT_THROW(MakeSeed(Tensor({2, 2, 2}, 0.5), cfg, labels), ShapeError);
}

TEST(UnaryFromCamsTest, DefaultTauIsComplementOfMax) {
  ActivationMap m;
  m.values = Tensor({1, 1, 2}, std::vector<double>{0.6, 1.0});
  m.classes = {1, 3};
  m.normalized = true;
  const Tensor u = UnaryFromCams(m);
  // Background 0, classes 0.6 and 1.0, renormalized.
  EXPECT_NEAR(u[0], 0.0, 1e-15);
  EXPECT_NEAR(u[1], 0.6 / 1.6, 1e-15);
  EXPECT_NEAR(u[2], 1.0 / 1.6, 1e-15);
}

TEST(UnaryFromCamsTest, TauPlacesSingleClassTie) {
  for (double tau : {0.2, 0.35, 0.5, 0.8}) {
    ActivationMap m;
    m.values = Tensor({1, 1, 1}, std::vector<double>{tau});
    m.classes = {0};
    m.normalized = true;
    const Tensor u = UnaryFromCams(m, tau);
    EXPECT_NEAR(u[0], u[1], 1e-12) << tau;
  }
  ActivationMap raw;
  raw.values = Tensor({1, 1, 1}, 0.5);
  raw.classes = {0};
  EXPECT_THROW(UnaryFromCams(raw), std::invalid_argument);
}

}  // namespace
}  // namespace amnkit::refine

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
#include "amnkit/synthdata/synthdata.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

namespace amnkit::synth {
namespace {

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(GenerateTest, SameSeedGivesByteIdenticalCorpus) {
  CorpusConfig cfg;
  cfg.num_images = 12;
  const auto a = Generate(cfg);
  const auto b = Generate(cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].ground_truth, b[i].ground_truth);
  }
  const auto dir = std::filesystem::temp_directory_path() / "amnkit_synth_test";
  std::filesystem::remove_all(dir);
  WriteCorpus(dir / "a", a, "train", cfg.num_classes);
  WriteCorpus(dir / "b", b, "train", cfg.num_classes);
  EXPECT_EQ(ReadFile(dir / "a" / "manifest.csv"), ReadFile(dir / "b" / "manifest.csv"));
  for (const auto& s : a) {
    const auto img = std::filesystem::path("images") / (s.id + ".ppm");
    EXPECT_EQ(ReadFile(dir / "a" / img), ReadFile(dir / "b" / img));
  }
  std::filesystem::remove_all(dir);
}

TEST(GenerateTest, DifferentSeedsDiffer) {
  CorpusConfig cfg;
  cfg.num_images = 3;
  const auto a = Generate(cfg);
  cfg.seed = 8;
  const auto b = Generate(cfg);
  EXPECT_NE(a[0].image, b[0].image);
}

TEST(GenerateTest, ImageMatchesCorpusEntry) {
  CorpusConfig cfg;
  cfg.num_images = 5;
  const auto all = Generate(cfg);
  EXPECT_EQ(GenerateImage(cfg, 3).image, all[3].image);
  cfg.first_index = 3;
  cfg.num_images = 1;
  EXPECT_EQ(Generate(cfg)[0].image, all[3].image);
}

TEST(GenerateTest, TwoClassesGiveOneOrTwoPresent) {
  CorpusConfig cfg;
  cfg.num_images = 10;
  cfg.num_classes = 2;
  cfg.confusable_pairs.clear();
  for (const Sample& s : Generate(cfg)) {
    const std::size_t k = PresentClasses(s.labels).size();
    EXPECT_GE(k, 1u);
    EXPECT_LE(k, 2u);
  }
}

TEST(GenerateTest, EveryClassIsFrequent) {
  CorpusConfig cfg;
  cfg.num_images = 200;
  const auto corpus = Generate(cfg);
  std::vector<int> count(cfg.num_classes, 0);
  for (const Sample& s : corpus) {
    for (int c : PresentClasses(s.labels)) ++count[c];
  }
  for (int c = 0; c < cfg.num_classes; ++c) EXPECT_GE(count[c], 30) << ClassName(c);
}

TEST(GenerateTest, LabelsAgreeWithMask) {
  CorpusConfig cfg;
  cfg.num_images = 50;
  for (const Sample& s : Generate(cfg)) {
    ASSERT_EQ(s.image.shape(), (Shape{64, 64, 3}));
    std::set<int> in_mask;
    for (auto v : s.ground_truth.labels) {
      ASSERT_TRUE(v <= cfg.num_classes || v == kUndefinedLabel);
      if (v != kBackgroundLabel && v != kUndefinedLabel) in_mask.insert(ClassIdOf(v));
    }
    const auto present = PresentClasses(s.labels);
    EXPECT_EQ(std::set<int>(present.begin(), present.end()), in_mask) << s.id;
    for (double v : s.image.values()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
  }
}

TEST(GenerateTest, RejectsInvalidConfig) {
  CorpusConfig cfg;
  cfg.num_classes = 0;
  EXPECT_THROW(Generate(cfg), std::invalid_argument);
  cfg = CorpusConfig{};
  cfg.min_objects = 4;
  cfg.max_objects = 2;
  EXPECT_THROW(Generate(cfg), std::invalid_argument);
}

TEST(CorpusIoTest, RoundTrip) {
  CorpusConfig cfg;
  cfg.num_images = 4;
  const auto corpus = Generate(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "amnkit_corpus_io_test";
  std::filesystem::remove_all(dir);
  WriteCorpus(dir, corpus, "val", cfg.num_classes);
  const auto back = ReadCorpus(dir, "val");
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].labels, corpus[i].labels);
    EXPECT_EQ(back[i].ground_truth, corpus[i].ground_truth);
    ASSERT_EQ(back[i].image.shape(), corpus[i].image.shape());
    for (std::size_t j = 0; j < corpus[i].image.size(); ++j) {
      ASSERT_NEAR(back[i].image[j], corpus[i].image[j], 0.5 / 255 + 1e-12);
    }
  }
  EXPECT_TRUE(ReadCorpus(dir, "train").empty());
  std::filesystem::remove_all(dir);
}

TEST(ClassNameTest, DistinctNames) {
  const auto names = ClassNames(6);
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), 6u);
}

}  // namespace
}  // namespace amnkit::synth

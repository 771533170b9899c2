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
#include "amnkit/pipeline/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "amnkit/pipeline/config.hpp"

namespace amnkit::pipeline {
namespace {

namespace fs = std::filesystem;

PipelineConfig TinyConfig() {
  PipelineConfig cfg;
  cfg.num_train = 8;
  cfg.num_val = 4;
  cfg.image_size = 32;
  cfg.cls_epochs = 2;
  cfg.batch_size = 4;
  cfg.amn_epochs = 1;
  cfg.aspp_channels = 8;
  cfg.seg_epochs = 1;
  cfg.crf.iterations = 3;
  return cfg;
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::map<std::string, std::string> ReadResults(const fs::path& root) {
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

TEST(ConfigTest, ParsesKeysCommentsAndLists) {
  const PipelineConfig cfg = ParseConfig(
      "# comment\n"
      "num_train = 12  # trailing\n"
      "\n"
      "epsilon=0.25\n"
      "lc_placements = 2, 4\n"
      "crf_iterations = 4\n");
  EXPECT_EQ(cfg.num_train, 12u);
  EXPECT_EQ(cfg.epsilon, 0.25);
  EXPECT_EQ(cfg.lc_placements, (std::vector<int>{2, 4}));
  EXPECT_EQ(cfg.crf.iterations, 4);
  EXPECT_TRUE(ParseConfig("lc_placements = none\n").lc_placements.empty());
}

TEST(ConfigTest, RejectsUnknownKeyWithLineNumber) {
  try {
    ParseConfig("num_train = 3\nlearning_rate_typo = 1\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("unknown key 'learning_rate_typo'"), std::string::npos);
  }
}

TEST(ConfigTest, RejectsMalformedAndOutOfRangeValues) {
  EXPECT_THROW(ParseConfig("num_train\n"), ConfigError);
  EXPECT_THROW(ParseConfig("num_train = ten\n"), ConfigError);
  EXPECT_THROW(ParseConfig("epsilon = 1.0\n"), ConfigError);
  EXPECT_THROW(ParseConfig("image_size = 36\n"), ConfigError);
  EXPECT_THROW(ParseConfig("lc_placements = 5\n"), ConfigError);
  EXPECT_THROW(ParseConfig("crf_theta_beta = 0\n"), ConfigError);
  EXPECT_THROW(ParseConfig("grid_step = 0\n"), ConfigError);
}

TEST(ConfigTest, SerializeRoundTripsAndHashTracksValues) {
  PipelineConfig cfg = TinyConfig();
  cfg.epsilon = 0.1;
  cfg.lc_placements = {1, 3};
  const PipelineConfig back = ParseConfig(SerializeConfig(cfg));
  EXPECT_EQ(SerializeConfig(back), SerializeConfig(cfg));
  EXPECT_EQ(ConfigHash(back), ConfigHash(cfg));
  EXPECT_EQ(ConfigHash(cfg).size(), 16u);
  cfg.epsilon = 0.2;
  EXPECT_NE(ConfigHash(back), ConfigHash(cfg));
}

TEST(ArtifactStoreTest, ManifestPersistsCompletion) {
  const fs::path dir = FreshDir("amnkit_store_test");
  std::string run_id;
  {
    ArtifactStore store(dir);
    run_id = store.run_id();
    EXPECT_FALSE(store.IsComplete("stage1", "abc"));
    store.MarkStarted("stage1", "abc");
    EXPECT_FALSE(store.IsComplete("stage1", "abc"));
    store.MarkComplete("stage1", "abc");
  }
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  ArtifactStore reopened(dir);
  EXPECT_EQ(reopened.run_id(), run_id);
  EXPECT_TRUE(reopened.IsComplete("stage1", "abc"));
  EXPECT_FALSE(reopened.IsComplete("stage1", "def"));
  EXPECT_TRUE(fs::is_directory(reopened.Dir("a/b")));
  fs::remove_all(dir);
}

TEST(PipelineTest, MissingUpstreamStageNamesBothStages) {
  const fs::path dir = FreshDir("amnkit_missing_stage_test");
  Pipeline p(TinyConfig(), dir);
  try {
    p.RunStage2();
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "stage2");
    EXPECT_NE(std::string(e.what()).find("stage 'stage1'"), std::string::npos);
  }
  EXPECT_THROW(p.Cams(), StageError);
  fs::remove_all(dir);
}

TEST(PipelineTest, StaleConfigHashIsNotReused) {
  const fs::path dir = FreshDir("amnkit_stale_test");
  {
    Pipeline p(TinyConfig(), dir);
    p.GenerateData();
    p.RunStage1();
  }
  PipelineConfig other = TinyConfig();
  other.cls_epochs = 3;
  Pipeline q(other, dir);
  EXPECT_FALSE(q.store().IsComplete("stage1", q.config_hash()));
  EXPECT_THROW(q.RunStage2(), StageError);
  fs::remove_all(dir);
}

TEST(PipelineTest, EndToEndIsDeterministicAndResumable) {
  const fs::path a = FreshDir("amnkit_e2e_a"), b = FreshDir("amnkit_e2e_b");
  double stage3 = 0.0;
  for (const fs::path& dir : {a, b}) {
    Pipeline p(TinyConfig(), dir, 2);
    p.GenerateData();
    p.RunStage1();
    p.RunStage2();
    stage3 = p.RunStage3();
    const EvalResult r = p.Evaluate();
    EXPECT_GE(r.stage2, 0.0);
    EXPECT_LE(r.stage2, 1.0);
    EXPECT_EQ(r.stage3_val, stage3);
    EXPECT_EQ(p.Seeds().size(), 8u);
  }
  const auto ra = ReadResults(a), rb = ReadResults(b);
  EXPECT_FALSE(ra.empty());
  EXPECT_EQ(ra, rb);

  // A new pipeline over the same store reuses the completed stages.
  Pipeline again(TinyConfig(), a);
  EXPECT_TRUE(again.store().IsComplete("stage2", again.config_hash()));
  again.RunStage2();
  EXPECT_EQ(again.AmnCrfMasks(MainVariant(again.config())).size(), 8u);
  fs::remove_all(a);
  fs::remove_all(b);
}

}  // namespace
}  // namespace amnkit::pipeline

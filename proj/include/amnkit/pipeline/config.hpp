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
#ifndef AMNKIT_PIPELINE_CONFIG_HPP_
#define AMNKIT_PIPELINE_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "amnkit/refine/crf.hpp"

namespace amnkit::pipeline {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PipelineConfig {
  // Corpus.
  std::size_t num_train = 200;
  std::size_t num_val = 50;
  std::size_t image_size = 64;
  int num_classes = 4;
  int min_objects = 1;
  int max_objects = 3;
  std::uint64_t seed = 7;

  // Classifier.
  int cls_epochs = 30;
  double cls_lr = 1e-3;
  int batch_size = 16;
  double weight_decay = 1e-4;

  refine::CrfConfig crf{};

  // Activation manipulation network.
  int amn_epochs = 5;
  double amn_lr = 3e-3;
  double amn_lr_ratio = 0.05;
  double epsilon = 0.4;
  std::vector<int> lc_placements{4};
  std::size_t aspp_channels = 64;
  double lc_bias_init = 0.0;

  // Segmentation network.
  int seg_epochs = 5;

  // Evaluation.
  double tau_global = 0.15;
  double sweep_tau_min = 0.05;
  double sweep_tau_max = 0.95;
  double sweep_tau_step = 0.05;
  double grid_step = 0.01;
  int hist_bins = 20;
};

// Parses "key = value" lines; '#' starts a comment. Unknown keys, malformed
// lines and invalid values throw ConfigError naming the line.
PipelineConfig ParseConfig(std::string_view text);
PipelineConfig LoadConfig(const std::filesystem::path& path);

// Canonical "key = value" listing of every key.
std::string SerializeConfig(const PipelineConfig& cfg);
// 16 hex digits of FNV-1a over SerializeConfig.
std::string ConfigHash(const PipelineConfig& cfg);

// Throws ConfigError for out-of-range values.
void ValidateConfig(const PipelineConfig& cfg);

}  // namespace amnkit::pipeline

#endif  // AMNKIT_PIPELINE_CONFIG_HPP_

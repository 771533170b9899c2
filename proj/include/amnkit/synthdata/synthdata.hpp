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
#ifndef AMNKIT_SYNTHDATA_SYNTHDATA_HPP_
#define AMNKIT_SYNTHDATA_SYNTHDATA_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "amnkit/types.hpp"

namespace amnkit::synth {

// Synthetic weakly-supervised corpus.
//
// Every class is a shape family (disk, square, triangle, annulus, cycling for
// N > 4) filled with a low-contrast body texture, plus one 6x6 high-contrast
// "head" patch that is unique to the class. Classes listed in
// `confusable_pairs` share their body texture and differ only in the head, so
// a classifier must rely on the head patch to tell them apart.
struct CorpusConfig {
  std::size_t num_images = 200;
  std::size_t first_index = 0;  // image i uses RNG stream (seed, first_index + i)
  std::size_t image_size = 64;
  int num_classes = 4;
  int min_objects = 1;
  int max_objects = 3;
  std::uint64_t seed = 7;
  std::vector<std::pair<int, int>> confusable_pairs{{2, 3}};
};

inline constexpr std::size_t kHeadPatchSize = 6;

// Throws std::invalid_argument for an invalid config and std::runtime_error
// when an image cannot be laid out within the placement budget.
std::vector<Sample> Generate(const CorpusConfig& cfg);

// One image of the corpus; Generate(cfg)[i] == GenerateImage(cfg, i).
Sample GenerateImage(const CorpusConfig& cfg, std::size_t index);

std::string ClassName(int class_id);
std::vector<std::string> ClassNames(int num_classes);

// Writes images/<id>.ppm, masks/<id>.pgm (+ label sidecar) and appends rows
// "id,split,labels,image,mask" to manifest.csv under `dir`.
void WriteCorpus(const std::filesystem::path& dir,
                 const std::vector<Sample>& samples, const std::string& split,
                 int num_classes);

// Reads every sample of `split` listed in dir/manifest.csv.
std::vector<Sample> ReadCorpus(const std::filesystem::path& dir,
                               const std::string& split);

}  // namespace amnkit::synth

#endif  // AMNKIT_SYNTHDATA_SYNTHDATA_HPP_

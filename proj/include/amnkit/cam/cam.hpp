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
#ifndef AMNKIT_CAM_CAM_HPP_
#define AMNKIT_CAM_CAM_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "amnkit/cam/backbone.hpp"
#include "amnkit/types.hpp"

namespace amnkit {

// Per-class spatial score maps at image resolution. `classes[k]` is the
// 0-based class id of channel k.
//
// When `normalized` is set, every value lies in [0, 1] and each channel is
// either all zero or has maximum exactly 1.
struct ActivationMap {
  Tensor values;  // [H, W, C]
  std::vector<int> classes;
  bool normalized = false;

  std::size_t height() const { return values.extent(0); }
  std::size_t width() const { return values.extent(1); }
  std::size_t channels() const { return values.extent(2); }
};

// GAP classifier: scores = GAP(f(x)) . W with W the [Q, N] head (no bias), so
// that the class activation map F_c = sum_i W[i, c] f_i(x) averages to the
// score of class c.
class ClassifierNet {
 public:
  ClassifierNet(int num_classes, std::uint64_t seed,
                const BackboneSpec& spec = BackboneSpec{});

  int num_classes() const { return num_classes_; }
  std::size_t feature_channels() const { return backbone_.feature_channels(); }

  Var Features(const Var& image) const { return backbone_.Forward(image); }
  Var Scores(const Var& features) const;

  const Backbone& backbone() const { return backbone_; }
  const Var& head_weights() const { return head_; }
  Var& mutable_head_weights() { return head_; }

  std::vector<NamedVar> NamedParameters() const;

 private:
  int num_classes_;
  Backbone backbone_;
  Var head_;  // [Q, N]
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  bool hflip = true;
  std::uint64_t seed = 1;
};

struct TrainHistory {
  std::vector<double> step_loss;  // mean loss of each optimizer step
  std::vector<double> learning_rate;
};

// Multi-label sigmoid cross-entropy training of the GAP scores with Adam.
// Throws std::invalid_argument for an empty corpus or a sample without a
// positive label, std::runtime_error on a non-finite loss.
TrainHistory TrainClassifier(ClassifierNet& net, std::span<const Sample> corpus,
                             const TrainConfig& cfg);

// Fraction of samples whose thresholded scores (> 0) match all labels.
double ClassificationAccuracy(const ClassifierNet& net,
                              std::span<const Sample> corpus);

// Raw CAM of one class, bilinearly upsampled to the image size.
ActivationMap ComputeCam(const ClassifierNet& net, const Tensor& image,
                         int class_id);
// Raw CAMs of several classes from one forward pass.
ActivationMap ComputeCams(const ClassifierNet& net, const Tensor& image,
                          std::span<const int> class_ids);
// CAMs at feature resolution [H_out, W_out, C] (before upsampling).
Tensor ComputeLowResCams(const ClassifierNet& net, const Tensor& image,
                         std::span<const int> class_ids);

// Per class: clamp negatives to zero, then divide by the class maximum.
ActivationMap NormalizeMap(const ActivationMap& map);

// "AMNMAP1", u32 H, u32 W, u32 C, C x i32 class ids, then H*W*C f32 values
// (little-endian, [H, W, C] order). The normalized flag is not stored; a
// loaded map is flagged normalized iff it satisfies the normalized invariant.
void WriteActivationMap(std::ostream& out, const ActivationMap& map);
ActivationMap ReadActivationMap(std::istream& in);
void SaveActivationMap(const std::filesystem::path& path, const ActivationMap& map);
ActivationMap LoadActivationMap(const std::filesystem::path& path);

bool SatisfiesNormalizedInvariant(const Tensor& values);

}  // namespace amnkit

#endif  // AMNKIT_CAM_CAM_HPP_

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
#ifndef AMNKIT_AMN_AMN_HPP_
#define AMNKIT_AMN_AMN_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amnkit/cam/backbone.hpp"
#include "amnkit/cam/cam.hpp"
#include "amnkit/types.hpp"

namespace amnkit::amn {

// Channel-wise conditioning: out[i, j, q] = features[i, j, q] * code[q].
// Throws ShapeError when the code length differs from the channel count.
Var LabelCondition(const Var& features, const Var& code);

// Per-pixel smoothed target built from a seed mask.
struct SmoothedTarget {
  Tensor dist;                      // [H, W, L]
  std::vector<std::uint8_t> valid;  // 0 where the seed is undefined
  SegMask seed;
  std::size_t num_valid() const;
};

// At a valid pixel with seed label l: 1 - epsilon on l and
// epsilon / (num_labels - 1) on every other label. Undefined (255) pixels are
// invalid and carry an all-zero row. Throws std::invalid_argument for
// epsilon outside [0, 1), num_labels < 2 or a seed label >= num_labels.
SmoothedTarget SmoothTarget(const SegMask& seed, double epsilon, int num_labels);

struct LossDiagnostics {
  std::size_t clamped_logs = 0;
};

// Logs of predictions below this value are clamped.
inline constexpr double kLogFloor = 1e-12;

// Balanced cross-entropy between a post-softmax prediction [H, W, L] and a
// smoothed target:
//   -(1/|P_fg|) sum_{u in P_fg} CE_u - (1/|P_bg|) sum_{u in P_bg} CE_u,
//   CE_u = sum_k target_u[k] log pred_u[k]
// P_fg are valid pixels seeded with a label in `fg_labels` (segmentation
// labels, 1-based), P_bg valid pixels seeded as background. Empty groups add 0.
Var PclLoss(const Var& pred, const SmoothedTarget& target,
            std::span<const std::uint8_t> fg_labels,
            LossDiagnostics* diagnostics = nullptr);

// Input fed to the conditioning encoder h.
enum class LcInput {
  kLabel,       // the image-level label vector
  kAllOnes,     // a constant one vector
  kLabelNoise,  // label vector plus a fixed per-image uniform [0, 0.5) vector
};

struct AmnSpec {
  int num_classes = 4;
  BackboneSpec backbone{};
  // 1-based block indices after which LC is applied; empty disables LC.
  std::vector<int> lc_placements{4};
  std::size_t aspp_channels = 64;
  std::vector<int> aspp_dilations{1, 2, 4};
  double lc_bias_init = 0.0;
};

// Activation manipulation network: backbone f, label conditioning h after the
// configured blocks, ASPP-style head g with N + 1 output channels.
class AmnNet {
 public:
  AmnNet(const AmnSpec& spec, std::uint64_t seed);

  const AmnSpec& spec() const { return spec_; }
  int num_labels() const { return spec_.num_classes + 1; }
  bool conditioned() const { return !spec_.lc_placements.empty(); }

  // Copies backbone weights (warm start); shapes must match.
  void LoadBackbone(const Backbone& source);

  // Conditioning vector h(code) for block `placement`.
  Var EncodeLabel(int placement, const Var& code) const;

  // Low-resolution logits [h, w, N + 1]. `code` is ignored without LC.
  // When `forced_code` is set it replaces h(code) at every placement.
  Var Logits(const Var& image, const Var& code,
             const std::optional<Tensor>& forced_code = std::nullopt) const;

  // M = softmax(g(f(x) * h(code))) upsampled to the image size.
  Var Forward(const Var& image, const Var& code,
              const std::optional<Tensor>& forced_code = std::nullopt) const;

  std::vector<NamedVar> NamedParameters() const;
  std::vector<Var> BackboneParameters() const;
  std::vector<Var> HeadParameters() const;  // head g and encoders h

 private:
  struct Encoder {
    int placement;
    Var weight;  // [N, Q_b]
    Var bias;    // [Q_b]
  };
  AmnSpec spec_;
  Backbone backbone_;
  std::vector<Encoder> encoders_;
  std::vector<Var> aspp_kernels_;  // [3, 3, Q, A] per dilation
  Var aspp_bias_;                  // [A]
  Var out_kernel_;                 // [1, 1, A, N + 1]
  Var out_bias_;                   // [N + 1]
};

// Encoder input for a sample.
Tensor EncoderInput(const LabelVector& labels, LcInput mode,
                    std::uint64_t seed, const std::string& sample_id);

// Inference: post-softmax map [H, W, N + 1]; channel 0 is background
// (class id -1), channel k is class k - 1.
ActivationMap AmnForward(const AmnNet& net, const Tensor& image,
                         const LabelVector& labels, LcInput mode = LcInput::kLabel,
                         std::uint64_t noise_seed = 0, const std::string& sample_id = "");

struct AmnTrainConfig {
  int epochs = 5;
  int batch_size = 16;
  double head_learning_rate = 3e-3;
  double backbone_lr_ratio = 1.0 / 20.0;  // backbone lr = ratio * head lr
  double weight_decay = 1e-4;
  double epsilon = 0.4;
  bool hflip = true;
  LcInput lc_input = LcInput::kLabel;
  std::uint64_t seed = 1;
};

struct AmnSample {
  const Sample* sample;
  const SegMask* seed;
};

struct AmnTrainHistory {
  std::vector<double> step_loss;
  std::vector<double> learning_rate;  // head group
  std::size_t clamped_logs = 0;
};

// Adam over two parameter groups (backbone, head + encoders). Throws
// std::invalid_argument when a sample lacks a seed, std::runtime_error on a
// non-finite loss.
AmnTrainHistory TrainAmn(AmnNet& net, std::span<const AmnSample> corpus,
                         const AmnTrainConfig& cfg);

// Channels of `m` restricted to background + classes present in `labels`,
// renormalized per pixel: [H, W, 1 + K].
Tensor RestrictToPresent(const ActivationMap& m, const LabelVector& labels);

// Argmax over background and present classes.
SegMask AmnMask(const ActivationMap& m, const LabelVector& labels);

// Foreground maps of the present classes for threshold analysis. The label
// smoothing floor is removed first: a = (p - e/(L-1)) / (1 - e - e/(L-1)),
// which maps the smoothed target levels back to 0 and 1; the result is then
// normalized with NormalizeMap.
ActivationMap AmnForegroundMaps(const ActivationMap& m, const LabelVector& labels,
                                double epsilon);

// CRF unary over background and every class. Uses the foreground maps of all
// classes, with the background boundary at 0.5, midway between the two
// target levels. Label information enters only through conditioning.
Tensor AmnUnary(const ActivationMap& m, double epsilon);

}  // namespace amnkit::amn

#endif  // AMNKIT_AMN_AMN_HPP_

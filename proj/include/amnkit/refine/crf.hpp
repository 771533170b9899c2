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
#ifndef AMNKIT_REFINE_CRF_HPP_
#define AMNKIT_REFINE_CRF_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "amnkit/cam/cam.hpp"
#include "amnkit/types.hpp"

namespace amnkit::refine {

// Fully connected CRF with Potts compatibility and two Gaussian kernels:
//   appearance  k_a(i,j) = exp(-|p_i-p_j|^2 / 2 theta_alpha^2
//                              -|I_i-I_j|^2 / 2 theta_beta^2)
//   smoothness  k_s(i,j) = exp(-|p_i-p_j|^2 / 2 theta_gamma^2)
// Positions are in pixels, colors in [0, 1]. Each kernel's message at pixel i
// is normalized by its row sum over j != i.
struct CrfConfig {
  int iterations = 10;
  double w_appearance = 4.0;
  double w_smoothness = 3.0;
  double theta_alpha = 20.0;
  double theta_beta = 0.1;
  double theta_gamma = 3.0;
  double confidence_threshold = 0.7;
};

// Throws std::invalid_argument unless iterations >= 1, bandwidths > 0,
// weights >= 0 and 0 < confidence_threshold < 1.
void Validate(const CrfConfig& cfg);

// Lower bound applied to unary probabilities before taking logs.
inline constexpr double kUnaryFloor = 1e-12;

struct CrfTrace {
  // L-infinity change of Q produced by each iteration.
  std::vector<double> linf_change;
  // False when the change grew between two iterations after the first one.
  bool monotone = true;
};

// Mean-field inference. `unary_probs` is [H, W, L] and must be a per-pixel
// distribution (row sums within 1e-6 of one, nonnegative); otherwise
// std::invalid_argument. Returns the [H, W, L] marginals.
Tensor CrfRefine(const Tensor& image, const Tensor& unary_probs,
                 const CrfConfig& cfg, CrfTrace* trace = nullptr);

// Runs CrfRefine for several unaries of the same image. The pairwise kernel is
// built once and each iteration multiplies it with all unaries together.
std::vector<Tensor> CrfRefineMany(const Tensor& image, std::span<const Tensor> unaries,
                                  const CrfConfig& cfg,
                                  std::vector<CrfTrace>* traces = nullptr);

// Unary distribution from normalized foreground CAMs: channel 0 is the
// background score (1 - max_c F_c)^alpha, channel k is F_{classes[k-1]},
// renormalized per pixel. alpha = ln(tau) / ln(1 - tau) places the
// foreground/background tie of a single class at activation `background_tau`;
// the default 0.5 gives alpha = 1. Throws std::invalid_argument for an
// un-normalized map or tau outside (0, 1).
Tensor UnaryFromCams(const ActivationMap& normalized_fg, double background_tau = 0.5);

// Segmentation label of each unary channel for a map built by UnaryFromCams
// (channel 0 is background).
std::vector<std::uint8_t> ChannelLabels(std::span<const int> class_ids);

// Per pixel: label of the argmax channel (lowest index on ties) if its
// probability is >= confidence_threshold, otherwise kUndefinedLabel.
// `channel_labels` maps channels to labels; empty means channel k -> k.
SegMask MakeSeed(const Tensor& refined_probs, const CrfConfig& cfg,
                 std::span<const std::uint8_t> channel_labels = {});

// Ungated per-pixel argmax mask.
SegMask ArgmaxMask(const Tensor& probs,
                   std::span<const std::uint8_t> channel_labels = {});

}  // namespace amnkit::refine

#endif  // AMNKIT_REFINE_CRF_HPP_

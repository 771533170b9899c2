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
#ifndef AMNKIT_TENSOROPS_OPS_HPP_
#define AMNKIT_TENSOROPS_OPS_HPP_

#include <span>

#include "amnkit/tensorops/autograd.hpp"

// Differentiable layers. Spatial maps are [H, W, C]; all ops validate shapes
// and throw ShapeError with both operand shapes on mismatch.
namespace amnkit::ops {

struct ConvParams {
  int stride = 1;
  int dilation = 1;
  int padding = 0;
};

// Output extent of a padded, strided, dilated convolution along one axis.
std::size_t ConvOutputExtent(std::size_t in, std::size_t kernel,
                             const ConvParams& p);

// Cross-correlation of [H, W, Cin] with a [k, k, Cin, Cout] kernel (k odd),
// zero padding.
Var Conv2d(const Var& input, const Var& kernel, const ConvParams& p = {});

// [H, W, C] + [C], broadcast over space.
Var AddChannelBias(const Var& map, const Var& bias);

// [H, W, C] * [C], broadcast over space.
Var ScaleChannels(const Var& map, const Var& scale);

Var Relu(const Var& x);
Var Sigmoid(const Var& x);
Var Log(const Var& x);

Var Add(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Scale(const Var& x, double factor);
Var Sum(const Var& x);

// [H, W, C] -> [C], spatial mean.
Var GlobalAveragePool(const Var& input);

// Per-pixel softmax over the channel axis, max-subtracted.
Var SoftmaxChannels(const Var& input);

// Align-corners-false bilinear resize of [h, w, C] to [out_h, out_w, C].
Var BilinearUpsample(const Var& input, std::size_t out_h, std::size_t out_w);

// vec [In] x weight [In, Out] + bias [Out] -> [Out]. `bias` may be undefined.
Var Linear(const Var& vec, const Var& weight, const Var& bias);

// Mean over entries of the numerically stable sigmoid cross-entropy between
// `logits` and 0/1 `targets` (same length).
Var SigmoidCrossEntropy(const Var& logits, std::span<const double> targets);

}  // namespace amnkit::ops

#endif  // AMNKIT_TENSOROPS_OPS_HPP_

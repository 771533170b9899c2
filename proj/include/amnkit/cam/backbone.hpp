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
#ifndef AMNKIT_CAM_BACKBONE_HPP_
#define AMNKIT_CAM_BACKBONE_HPP_

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "amnkit/tensorops/autograd.hpp"
#include "amnkit/tensorops/checkpoint.hpp"

namespace amnkit {

using NamedVar = std::pair<std::string, Var>;

struct BackboneSpec {
  std::size_t in_channels = 3;
  std::vector<std::size_t> channels{16, 32, 64, 64};
  std::vector<int> strides{1, 2, 2, 2};
};

// Stack of conv3x3 (+bias) -> relu blocks. Shared by the classifier, the
// activation manipulation network and the segmentation network.
class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneSpec& spec, std::mt19937_64& rng);

  std::size_t num_blocks() const { return blocks_.size(); }
  std::size_t out_channels(std::size_t block) const;
  std::size_t feature_channels() const { return out_channels(num_blocks() - 1); }
  int total_stride() const;

  Var ApplyBlock(std::size_t block, const Var& x) const;
  Var Forward(const Var& image) const;

  void AppendParameters(const std::string& prefix, std::vector<NamedVar>& out) const;
  // Deep copy with fresh parameter leaves.
  Backbone Clone() const;

 private:
  struct Block {
    Var kernel;  // [3, 3, Cin, Cout]
    Var bias;    // [Cout]
    int stride = 1;
  };
  std::vector<Block> blocks_;
};

// He-normal [k, k, cin, cout] kernel.
Tensor HeNormalKernel(std::size_t k, std::size_t cin, std::size_t cout,
                      std::mt19937_64& rng);

std::vector<NamedTensor> StateDict(const std::vector<NamedVar>& params);
// Copies values by name; throws std::runtime_error on a missing name or a
// shape mismatch.
void LoadStateDict(const std::vector<NamedVar>& params,
                   const std::vector<NamedTensor>& state);

std::vector<Var> ParameterVars(const std::vector<NamedVar>& params);

}  // namespace amnkit

#endif  // AMNKIT_CAM_BACKBONE_HPP_

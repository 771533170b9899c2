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
#ifndef AMNKIT_TENSOROPS_ADAM_HPP_
#define AMNKIT_TENSOROPS_ADAM_HPP_

#include <vector>

#include "amnkit/tensorops/autograd.hpp"

namespace amnkit {

struct ParamGroup {
  std::vector<Var> params;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
};

// Adam with bias correction; weight decay is added to the gradient (L2).
// Step() consumes the accumulated gradients scaled by `grad_scale`.
class Adam {
 public:
  explicit Adam(std::vector<ParamGroup> groups, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void Step(double grad_scale = 1.0);
  void ZeroGrad();
  long steps() const { return t_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<ParamGroup> groups_;
  std::vector<std::vector<Slot>> slots_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace amnkit

#endif  // AMNKIT_TENSOROPS_ADAM_HPP_

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
#include "amnkit/tensorops/adam.hpp"

#include <cmath>

namespace amnkit {

Adam::Adam(std::vector<ParamGroup> groups, double beta1, double beta2,
           double eps)
    : groups_(std::move(groups)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& g : groups_) {
    std::vector<Slot> slots;
    for (const Var& p : g.params) {
      slots.push_back({std::vector<double>(p.size(), 0.0),
                       std::vector<double>(p.size(), 0.0)});
    }
    slots_.push_back(std::move(slots));
  }
}

void Adam::Step(double grad_scale) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    ParamGroup& group = groups_[gi];
    if (group.learning_rate == 0.0) continue;
    for (std::size_t pi = 0; pi < group.params.size(); ++pi) {
      Var& p = group.params[pi];
      Slot& s = slots_[gi][pi];
      auto w = p.mutable_value().values();
      const auto g = p.grad();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi_ = (g.empty() ? 0.0 : g[i] * grad_scale) +
                           group.weight_decay * w[i];
        s.m[i] = beta1_ * s.m[i] + (1.0 - beta1_) * gi_;
        s.v[i] = beta2_ * s.v[i] + (1.0 - beta2_) * gi_ * gi_;
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        w[i] -= group.learning_rate * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }
}

void Adam::ZeroGrad() {
  for (auto& group : groups_) {
    for (Var& p : group.params) p.zero_grad();
  }
}

}  // namespace amnkit

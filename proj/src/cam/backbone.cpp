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
#include "amnkit/cam/backbone.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "amnkit/tensorops/ops.hpp"

namespace amnkit {

Tensor HeNormalKernel(std::size_t k, std::size_t cin, std::size_t cout,
                      std::mt19937_64& rng) {
  std::normal_distribution<double> normal(
      0.0, std::sqrt(2.0 / static_cast<double>(k * k * cin)));
  Tensor t(Shape{k, k, cin, cout});
  for (double& v : t.values()) v = normal(rng);
  return t;
}

Backbone::Backbone(const BackboneSpec& spec, std::mt19937_64& rng) {
  if (spec.channels.empty() || spec.channels.size() != spec.strides.size()) {
    throw std::invalid_argument("backbone: channels and strides must align");
  }
  std::size_t cin = spec.in_channels;
  for (std::size_t i = 0; i < spec.channels.size(); ++i) {
    Block b;
    b.kernel = Var::Parameter(HeNormalKernel(3, cin, spec.channels[i], rng));
    b.bias = Var::Parameter(Tensor(Shape{spec.channels[i]}));
    b.stride = spec.strides[i];
    blocks_.push_back(std::move(b));
    cin = spec.channels[i];
  }
}

std::size_t Backbone::out_channels(std::size_t block) const {
  return blocks_.at(block).kernel.shape()[3];
}

int Backbone::total_stride() const {
  int s = 1;
  for (const Block& b : blocks_) s *= b.stride;
  return s;
}

Var Backbone::ApplyBlock(std::size_t block, const Var& x) const {
  const Block& b = blocks_.at(block);
  Var y = ops::Conv2d(x, b.kernel, {.stride = b.stride, .dilation = 1, .padding = 1});
  return ops::Relu(ops::AddChannelBias(y, b.bias));
}

Var Backbone::Forward(const Var& image) const {
  Var x = image;
  for (std::size_t i = 0; i < blocks_.size(); ++i) x = ApplyBlock(i, x);
  return x;
}

void Backbone::AppendParameters(const std::string& prefix,
                                std::vector<NamedVar>& out) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const std::string p = prefix + "block" + std::to_string(i + 1) + ".";
    out.emplace_back(p + "kernel", blocks_[i].kernel);
    out.emplace_back(p + "bias", blocks_[i].bias);
  }
}

Backbone Backbone::Clone() const {
  Backbone copy;
  for (const Block& b : blocks_) {
    copy.blocks_.push_back({Var::Parameter(b.kernel.value()),
                            Var::Parameter(b.bias.value()), b.stride});
  }
  return copy;
}

std::vector<NamedTensor> StateDict(const std::vector<NamedVar>& params) {
  std::vector<NamedTensor> state;
  state.reserve(params.size());
  for (const auto& [name, v] : params) {
    Tensor t(v.shape(), std::vector<double>(v.value().values().begin(),
                                            v.value().values().end()));
    state.emplace_back(name, std::move(t));
  }
  return state;
}

void LoadStateDict(const std::vector<NamedVar>& params,
                   const std::vector<NamedTensor>& state) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : state) by_name[name] = &t;
  for (const auto& [name, v] : params) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint is missing tensor '" + name + "'");
    }
    if (it->second->shape() != v.shape()) {
      throw std::runtime_error("checkpoint tensor '" + name + "' has shape " +
                               ShapeToString(it->second->shape()) + ", expected " +
                               ShapeToString(v.shape()));
    }
    Var target = v;
    auto dst = target.mutable_value().values();
    const auto src = it->second->values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

std::vector<Var> ParameterVars(const std::vector<NamedVar>& params) {
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const auto& [name, v] : params) vars.push_back(v);
  return vars;
}

}  // namespace amnkit

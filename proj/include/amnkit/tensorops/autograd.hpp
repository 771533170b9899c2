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
#ifndef AMNKIT_TENSOROPS_AUTOGRAD_HPP_
#define AMNKIT_TENSOROPS_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "amnkit/tensorops/tensor.hpp"

namespace amnkit {

namespace detail {

struct Node {
  Tensor value;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads value.grad() and accumulates into the parents' gradients.
  std::function<void(Node&)> backward;
  bool is_leaf = true;
};

}  // namespace detail

// Handle to a node of the dynamic gradient tape. Copies share the node.
//
// Ops build the tape implicitly: an op records its inputs and a backward
// closure only when at least one input requires a gradient, so inference
// passes keep no history. A tape is single-threaded; parameter leaves may be
// read from several threads as long as nobody calls Backward on them.
class Var {
 public:
  Var() = default;

  static Var Constant(Tensor value);
  static Var Parameter(Tensor value);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  // Mutable access for optimizers and checkpoint loading.
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->value.requires_grad(); }

  std::span<const double> grad() const { return node_->value.grad(); }
  void zero_grad() { node_->value.zero_grad(); }

  // Internal: used by op implementations.
  static Var FromNode(std::shared_ptr<detail::Node> node) {
    Var v;
    v.node_ = std::move(node);
    return v;
  }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// While alive, ops on this thread record no history (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds the output node of an op. `backward` is dropped (and parents are not
// retained) when no input requires a gradient.
Var MakeResult(Tensor value, std::vector<Var> inputs,
               std::function<void(detail::Node&)> backward);

// Propagates d(loss)/d(.) to every reachable tensor with requires_grad.
// Gradients of parameter leaves accumulate across calls; the caller zeroes
// them between optimizer steps. Throws ShapeError for a non-scalar loss.
void Backward(const Var& loss);

}  // namespace amnkit

#endif  // AMNKIT_TENSOROPS_AUTOGRAD_HPP_

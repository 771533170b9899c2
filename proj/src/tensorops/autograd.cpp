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
#include "amnkit/tensorops/autograd.hpp"

#include <unordered_set>

namespace amnkit {
namespace {
thread_local bool g_no_grad = false;
}

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }

Var Var::Constant(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  value.set_requires_grad(false);
  node->value = std::move(value);
  return FromNode(std::move(node));
}

Var Var::Parameter(Tensor value) {
  auto node = std::make_shared<detail::Node>();
  value.set_requires_grad(true);
  value.zero_grad();
  node->value = std::move(value);
  return FromNode(std::move(node));
}

Var MakeResult(Tensor value, std::vector<Var> inputs,
               std::function<void(detail::Node&)> backward) {
  auto node = std::make_shared<detail::Node>();
  bool any = false;
  if (!g_no_grad) {
    for (const Var& in : inputs) any = any || in.requires_grad();
  }
  value.set_requires_grad(any);
  node->value = std::move(value);
  node->is_leaf = false;
  if (any) {
    node->parents.reserve(inputs.size());
    for (const Var& in : inputs) node->parents.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Var::FromNode(std::move(node));
}

void Backward(const Var& loss) {
  if (!loss.defined() || loss.size() != 1 || loss.value().rank() > 1) {
    throw ShapeError("Backward needs a scalar loss, got shape " +
                     (loss.defined() ? ShapeToString(loss.shape())
                                     : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order of the tape.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->value.requires_grad() && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (detail::Node* node : order) {
    if (node->is_leaf) {
      node->value.grad();  // allocate if missing, keep accumulated values
    } else {
      node->value.zero_grad();
    }
  }
  loss.node()->value.grad()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

}  // namespace amnkit

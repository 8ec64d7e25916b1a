// Copyright (c) the ICAE Project Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "icae/tensor.hpp"

namespace icae {

struct Node;

// Reverse-mode differentiable handle to a tensor. Copies share the node, so
// parameters can be referenced from many places and updated in one.
class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  bool is_leaf() const;

  // Gradient buffer; empty tensor until a backward sweep reaches this node.
  const Tensor& grad() const;
  bool has_grad() const;
  void zero_grad();

  // Leaf-only mutable access, used by optimizers and checkpoint loading.
  Tensor& mutable_value();

  const std::string& op() const;
  std::uint64_t sequence() const;
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  friend Var make_result(Tensor, std::vector<Var>, std::string,
                         std::function<void(Node&)>);
  std::shared_ptr<Node> node_;
};

// One recorded operation. `backward` reads `grad` and accumulates into the
// gradients of `inputs`.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  bool leaf = true;
  bool backward_done = false;
  std::uint64_t sequence = 0;
  std::string op;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
};

// Gradient buffer of an input node, allocated as zeros on first use.
Tensor& grad_buffer(Node& node);

// Records an operation result. When gradient recording is disabled or no
// input requires a gradient, the result is a detached constant.
Var make_result(Tensor value, std::vector<Var> inputs, std::string op,
                std::function<void(Node&)> backward);

// Single reverse sweep from a scalar loss. Nodes are visited in decreasing
// creation order, which is a topological order of the recorded graph.
void backward(const Var& loss);

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Enables per-op finiteness checks on the current thread; a failing op
// reports the innermost active scope name.
class FiniteCheckGuard {
 public:
  FiniteCheckGuard();
  ~FiniteCheckGuard();
  FiniteCheckGuard(const FiniteCheckGuard&) = delete;
  FiniteCheckGuard& operator=(const FiniteCheckGuard&) = delete;

 private:
  bool previous_;
};

bool finite_checks_enabled();

// Names the layer currently being evaluated (e.g. "g_a.3") for diagnostics.
class ScopeGuard {
 public:
  explicit ScopeGuard(std::string name);
  ~ScopeGuard();
  ScopeGuard(const ScopeGuard&) = delete;
  ScopeGuard& operator=(const ScopeGuard&) = delete;
};

std::string current_scope();

}  // namespace icae

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

#include "icae/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "icae/error.hpp"

namespace icae {
namespace {

std::atomic<std::uint64_t> g_sequence{0};
thread_local bool t_grad_enabled = true;
thread_local bool t_finite_checks = false;
thread_local std::vector<std::string> t_scopes;

std::uint64_t next_sequence() { return g_sequence.fetch_add(1) + 1; }

const Tensor& empty_tensor() {
  static const Tensor kEmpty;
  return kEmpty;
}

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
  node_->leaf = true;
  node_->sequence = next_sequence();
  node_->op = "leaf";
}

const Tensor& Var::value() const {
  require(defined(), ErrorKind::kAutodiff, "use of an undefined Var");
  return node_->value;
}

bool Var::requires_grad() const { return defined() && node_->requires_grad; }
bool Var::is_leaf() const { return defined() && node_->leaf; }

const Tensor& Var::grad() const {
  return defined() ? node_->grad : empty_tensor();
}

bool Var::has_grad() const { return defined() && !node_->grad.empty(); }

void Var::zero_grad() {
  if (defined()) node_->grad = Tensor();
}

Tensor& Var::mutable_value() {
  require(is_leaf(), ErrorKind::kAutodiff,
          "only leaf tensors may be modified in place");
  return node_->value;
}

const std::string& Var::op() const { return node_->op; }
std::uint64_t Var::sequence() const { return node_->sequence; }

Tensor& grad_buffer(Node& node) {
  if (node.grad.empty()) node.grad = Tensor(node.value.shape(), 0);
  return node.grad;
}

Var make_result(Tensor value, std::vector<Var> inputs, std::string op,
                std::function<void(Node&)> backward_fn) {
  if (t_finite_checks && !value.all_finite()) {
    const std::string scope = current_scope();
    fail(ErrorKind::kNonFinite,
         "non-finite output of " + op + (scope.empty() ? "" : " in " + scope));
  }
  const bool record =
      t_grad_enabled &&
      std::any_of(inputs.begin(), inputs.end(),
                  [](const Var& v) { return v.requires_grad(); });
  Var out;
  out.node_ = std::make_shared<Node>();
  out.node_->value = std::move(value);
  out.node_->sequence = next_sequence();
  out.node_->op = std::move(op);
  if (record) {
    out.node_->requires_grad = true;
    out.node_->leaf = false;
    out.node_->backward = std::move(backward_fn);
    out.node_->inputs.reserve(inputs.size());
    for (const auto& in : inputs) out.node_->inputs.push_back(in.node());
  }
  return out;
}

void backward(const Var& loss) {
  require(loss.defined(), ErrorKind::kAutodiff, "backward on an undefined Var");
  require(loss.value().numel() == 1, ErrorKind::kAutodiff,
          "backward requires a scalar loss, got shape " +
              loss.shape().str());
  require(loss.requires_grad(), ErrorKind::kAutodiff,
          "backward on a tensor that is detached from every parameter");
  require(!loss.node()->backward_done, ErrorKind::kAutodiff,
          "backward already ran through this graph; rebuild it first");

  // Owning references: clearing a node's inputs below must not free nodes
  // that are still queued.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> seen;
  std::vector<std::shared_ptr<Node>> stack{loss.node()};
  while (!stack.empty()) {
    std::shared_ptr<Node> node = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(node.get()).second) continue;
    for (const auto& in : node->inputs) {
      if (in->requires_grad && !seen.count(in.get())) stack.push_back(in);
    }
    order.push_back(std::move(node));
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return a->sequence > b->sequence;
  });

  loss.node()->grad = Tensor(loss.shape(), 1);
  for (const auto& node : order) {
    if (node->leaf) continue;
    if (node->backward_done) {
      fail(ErrorKind::kAutodiff,
           "backward already ran through node '" + node->op + "'");
    }
    if (!node->grad.empty() && node->backward) node->backward(*node);
    node->backward_done = true;
    node->backward = nullptr;
    node->inputs.clear();
    if (node != loss.node()) node->grad = Tensor();
  }
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) {
  t_grad_enabled = false;
}
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

FiniteCheckGuard::FiniteCheckGuard() : previous_(t_finite_checks) {
  t_finite_checks = true;
}
FiniteCheckGuard::~FiniteCheckGuard() { t_finite_checks = previous_; }
bool finite_checks_enabled() { return t_finite_checks; }

ScopeGuard::ScopeGuard(std::string name) { t_scopes.push_back(std::move(name)); }
ScopeGuard::~ScopeGuard() { t_scopes.pop_back(); }

std::string current_scope() {
  return t_scopes.empty() ? std::string() : t_scopes.back();
}

}  // namespace icae

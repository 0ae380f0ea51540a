// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#include "inrvc/tensor.hpp"

#include <atomic>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace inrvc {

namespace {

thread_local Precision g_precision = Precision::kFloat32;
std::atomic<std::uint64_t> g_next_id{1};

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Precision current_precision() noexcept { return g_precision; }

PrecisionScope::PrecisionScope(Precision p) noexcept : saved_(g_precision) { g_precision = p; }
PrecisionScope::~PrecisionScope() { g_precision = saved_; }

namespace {

std::shared_ptr<detail::Node> new_leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  const Precision p = current_precision();
  for (double& v : data) v = round_to_storage(v, p);
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  node->is_leaf = true;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return wrap(new_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return wrap(new_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    fail(ErrorCode::kShapeMismatch, "Tensor::from: " + std::to_string(values.size()) +
                                        " values for shape " + shape_str(shape));
  }
  return wrap(new_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

double Tensor::item() const {
  require(numel() == 1, ErrorCode::kContractViolation, "item() on a non-scalar tensor");
  return node_->data[0];
}

std::span<double> Tensor::mutable_data() {
  require(node_->is_leaf, ErrorCode::kContractViolation, "mutable_data() on a non-leaf tensor");
  return node_->data;
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = node_->shape;
  node->data = node_->data;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return wrap(std::move(node));
}

Tensor Tensor::clone(bool requires_grad) const {
  Tensor t = detach();
  t.node_->requires_grad = requires_grad;
  return t;
}

Tensor GradMap::operator[](const Tensor& param) const {
  auto it = grads_.find(param.id());
  if (it != grads_.end()) return it->second;
  PrecisionScope keep(Precision::kFloat64);
  return Tensor::zeros(param.shape());
}

GradMap backward(const Tensor& loss) {
  require(loss.defined() && loss.numel() == 1, ErrorCode::kContractViolation,
          "backward: loss must be a scalar tensor");
  GradMap result;
  if (!loss.requires_grad()) return result;

  // Iterative post-order DFS gives a topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->grad.empty()) continue;
    if (node->is_leaf) {
      PrecisionScope keep(Precision::kFloat64);
      result.set(node->id, Tensor::from(node->shape, node->grad));
    } else if (node->backward) {
      node->backward(*node);
    }
  }
  for (detail::Node* node : order) {
    node->grad.clear();
    node->grad.shrink_to_fit();
  }
  return result;
}

}  // namespace inrvc

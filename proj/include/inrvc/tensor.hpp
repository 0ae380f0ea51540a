// Copyright 2026 The inrvc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "inrvc/error.hpp"

namespace inrvc {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Storage precision for values produced by tensor ops.
//
// Values are held in 64-bit slots. In kFloat32 mode (the default) every
// stored value is rounded to the nearest binary32, so parameters and
// activations carry float semantics while reductions still accumulate in
// 64 bits. kFloat64 keeps full precision; gradient checks run in it.
enum class Precision { kFloat32, kFloat64 };

Precision current_precision() noexcept;

class PrecisionScope {
 public:
  explicit PrecisionScope(Precision p) noexcept;
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  Precision saved_;
};

inline double round_to_storage(double v, Precision p) noexcept {
  return p == Precision::kFloat32 ? static_cast<double>(static_cast<float>(v)) : v;
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated during backward only
  bool requires_grad = false;
  bool is_leaf = true;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor handle. Copies share storage; ops build a graph
/// that backward() walks in reverse.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }
  std::span<const double> data() const { return node_->data; }
  std::vector<double> to_vector() const { return node_->data; }
  double item() const;
  double at(std::size_t flat_index) const { return node_->data.at(flat_index); }

  /// In-place access for leaves (parameter updates, perturbation).
  std::span<double> mutable_data();

  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  std::uint64_t id() const noexcept { return node_ ? node_->id : 0; }

  /// Same values, no gradient path.
  Tensor detach() const;
  /// Deep copy with its own storage and a fresh id.
  Tensor clone(bool requires_grad) const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::Node> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Gradients keyed by parameter id. Parameters the loss never reached
/// report an all-zero gradient.
class GradMap {
 public:
  void set(std::uint64_t id, Tensor grad) { grads_[id] = std::move(grad); }
  bool contains(const Tensor& param) const { return grads_.count(param.id()) != 0; }
  Tensor operator[](const Tensor& param) const;
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<std::uint64_t, Tensor> grads_;
};

GradMap backward(const Tensor& loss);

// Op set. Binary elementwise ops broadcast NumPy-style (right-aligned
// dims, size-1 expands). All reductions accumulate sequentially in
// row-major order.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

Tensor matmul(const Tensor& a, const Tensor& b);  // [M,K] x [K,N]
Tensor transpose(const Tensor& a);                 // 2-D only
Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& axes);

/// x [N,Ci,H,W], weight [Co,Ci,k,k], bias [Co] (may be undefined), stride 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t padding);
/// Nearest-neighbour 2x on the last two axes.
Tensor upsample_nearest2x(const Tensor& x);

Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor sin(const Tensor& x);
Tensor softmax_lastdim(const Tensor& x);
/// Normalizes over the last axis, no affine.
Tensor layer_norm(const Tensor& x, double eps = 1e-5);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean of squared differences; shapes must match.
Tensor mse(const Tensor& a, const Tensor& b);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);

/// Forward value `replacement`, gradient passed to `x` unchanged.
Tensor straight_through(const Tensor& x, const Tensor& replacement);

}  // namespace inrvc

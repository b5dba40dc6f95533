// Copyright 2026 The stssl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stssl/tensor.hpp"

namespace stssl {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid for the
/// lifetime of its tape.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
/// sweep visits every node after all of its consumers.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf tensor. Named leaves that require grad are reported by gradients().
  Var leaf(Tensor value, bool requires_grad, std::string name = {});
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Interior node; it requires grad iff any parent does, in which case
  /// `backward` is kept and later called with the node's own id.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient buffer of a node, zero-initialized on first access.
  Tensor& grad(std::size_t id);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
  void backward(Var loss);

  /// Runs backward and returns the gradient of every named, grad-requiring
  /// leaf reachable from `loss`. Unreachable or gradient-stopped leaves are
  /// absent from the map.
  std::map<std::string, Tensor> gradients(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::string name;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

namespace ops {

/// x: [B, Cin, T, H, W], weight: [Cout, Cin, k, k, k], padding (k-1)/2.
Var conv3d(Var x, Var weight, std::optional<Var> bias, std::int64_t stride);
/// Per-channel normalization over every axis except 1, with batch statistics.
Var batch_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var leaky_relu(Var x, double slope);
Var add(Var a, Var b);
Var scale(Var a, double factor);
/// [B, C, ...] -> [B, C]
Var global_avg_pool(Var x);
/// x: [B, in], weight: [out, in], bias: [out]
Var linear(Var x, Var weight, Var bias);
/// Stacks [B1, F] and [B2, F] into [B1 + B2, F].
Var concat_rows(Var a, Var b);
/// Copies the value and blocks gradient flow.
Var stop_gradient(Var x);

/// Scalar sum of squares.
Var sum_squares(Var x);
/// Scalar <x, weights> against a constant tensor of the same shape.
Var dot(Var x, const Tensor& weights);

/// Mean over rows of 2 - 2 cos(q_i, z_i). `z` never receives gradient.
/// Throws ComputationError on a zero-norm row.
Var byol_loss(Var q, Var z);
/// Normalized-temperature cross entropy over 2B rows paired as (i, i + B).
Var ntxent_loss(Var z, double temperature);
/// Mean softmax cross entropy. Throws InputError for labels outside [0, C).
Var cross_entropy(Var logits, std::span<const int> labels);

}  // namespace ops
}  // namespace stssl

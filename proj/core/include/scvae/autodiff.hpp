// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scvae/tensor.hpp"

namespace scvae::ad {

struct NodeData;
using NodePtr = std::shared_ptr<NodeData>;

struct NodeData {
  Tensor value;
  Tensor grad;  // empty until first needed; same shape as value afterwards
  bool requires_grad = false;
  bool leaf = true;
  std::vector<NodePtr> parents;
  std::function<void(NodeData&)> backward;

  Tensor& ensure_grad();
};

// Handle onto a vertex of the differentiation graph. Copies share the vertex.
class Node {
 public:
  Node() = default;
  explicit Node(NodePtr data) : data_(std::move(data)) {}

  static Node constant(Tensor value);
  static Node variable(Tensor value);

  const Tensor& value() const { return data_->value; }
  Tensor& mutable_value() { return data_->value; }
  const Shape& shape() const { return data_->value.shape(); }
  std::size_t size() const { return data_->value.size(); }
  bool requires_grad() const { return data_ && data_->requires_grad; }
  bool valid() const noexcept { return static_cast<bool>(data_); }

  // Gradient accumulated by backward(); zeros if nothing flowed here yet.
  const Tensor& grad() const;
  void zero_grad();

  const NodePtr& ptr() const noexcept { return data_; }

 private:
  NodePtr data_;
};

// While alive, ops on this thread do not record backward closures.
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

Node matmul(const Node& a, const Node& b);

// Binary ops take equal shapes, or one operand holding a single element.
Node add(const Node& a, const Node& b);
Node sub(const Node& a, const Node& b);
Node mul(const Node& a, const Node& b);
Node neg(const Node& a);
Node scale(const Node& a, double factor);
Node sigmoid(const Node& a);
Node tanh(const Node& a);
Node exp(const Node& a);
Node log(const Node& a);
Node clamp(const Node& a, double lo, double hi);

enum class Elementwise { kAdd, kSub, kMul, kSigmoid, kTanh, kExp, kLog, kNeg };
Node elementwise(Elementwise op, std::span<const Node> inputs);

// x[m x n] plus bias[1 x n] (or [n]) added to every row.
Node add_rowwise(const Node& x, const Node& bias);

Node concat(std::span<const Node> nodes, std::size_t axis);
Node concat(std::initializer_list<Node> nodes, std::size_t axis);
Node slice(const Node& a, std::size_t axis, std::size_t begin, std::size_t end);

Node sum(const Node& a);

// Rows of `table` selected by ids; backward scatters into the selected rows.
Node gather_rows(const Node& table, std::span<const int> ids);

// -log softmax(logits)[target] for a single logit vector.
Node softmax_cross_entropy(const Node& logits, int target);
// Summed over rows of logits[B x V]; rows whose target is negative are skipped.
Node softmax_cross_entropy(const Node& logits, std::span<const int> targets);

// Sum of binary cross-entropies with logits; targets in [0,1], same shape.
Node sigmoid_cross_entropy(const Node& logits, const Tensor& targets);

// Reverse-mode sweep from a scalar root. Leaf gradients accumulate across
// calls; intermediate gradients are reset at the start of every sweep.
void backward(const Node& root);

}  // namespace scvae::ad

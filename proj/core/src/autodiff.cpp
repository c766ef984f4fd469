// SPDX-License-Identifier: Apache-2.0
#include "scvae/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace scvae::ad {
namespace {

thread_local bool g_grad_enabled = true;

Node make_result(Tensor value, std::vector<NodePtr> parents, std::function<void(NodeData&)> fn) {
  auto data = std::make_shared<NodeData>();
  data->value = std::move(value);
  data->leaf = false;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const NodePtr& p) { return p->requires_grad; });
  if (g_grad_enabled && any) {
    data->requires_grad = true;
    data->parents = std::move(parents);
    data->backward = std::move(fn);
  }
  return Node(std::move(data));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

// Scalar-vs-tensor broadcast resolution for binary ops.
struct Broadcast {
  Shape shape;
  std::size_t stride_a;
  std::size_t stride_b;
};

Broadcast resolve(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return {a.shape(), 1, 1};
  if (a.size() == 1) return {b.shape(), 0, 1};
  if (b.size() == 1) return {a.shape(), 1, 0};
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
}

template <class Forward, class GradA, class GradB>
Node binary(const Node& a, const Node& b, const char* name, Forward f, GradA ga, GradB gb) {
  const auto bc = resolve(a.value(), b.value(), name);
  Tensor out(bc.shape);
  const double* pa = a.value().data().data();
  const double* pb = b.value().data().data();
  double* po = out.data().data();
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) po[i] = f(pa[i * bc.stride_a], pb[i * bc.stride_b]);
  return make_result(std::move(out), {a.ptr(), b.ptr()}, [bc, ga, gb](NodeData& self) {
    const auto& pa_node = self.parents[0];
    const auto& pb_node = self.parents[1];
    const double* g = self.grad.data().data();
    const double* va = pa_node->value.data().data();
    const double* vb = pb_node->value.data().data();
    const std::size_t n = self.value.size();
    if (pa_node->requires_grad) {
      double* da = pa_node->ensure_grad().data().data();
      for (std::size_t i = 0; i < n; ++i)
        da[i * bc.stride_a] += g[i] * ga(va[i * bc.stride_a], vb[i * bc.stride_b]);
    }
    if (pb_node->requires_grad) {
      double* db = pb_node->ensure_grad().data().data();
      for (std::size_t i = 0; i < n; ++i)
        db[i * bc.stride_b] += g[i] * gb(va[i * bc.stride_a], vb[i * bc.stride_b]);
    }
  });
}

// Unary op whose derivative is expressed through input x and output y.
template <class Forward, class Deriv>
Node unary(const Node& a, Forward f, Deriv d) {
  Tensor out(a.shape());
  const double* pa = a.value().data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) po[i] = f(pa[i]);
  return make_result(std::move(out), {a.ptr()}, [d](NodeData& self) {
    auto& parent = *self.parents[0];
    double* dp = parent.ensure_grad().data().data();
    const double* g = self.grad.data().data();
    const double* x = parent.value.data().data();
    const double* y = self.value.data().data();
    for (std::size_t i = 0; i < self.value.size(); ++i) dp[i] += g[i] * d(x[i], y[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor& NodeData::ensure_grad() {
  if (grad.size() != value.size()) grad = Tensor(value.shape());
  return grad;
}

Node Node::constant(Tensor value) {
  auto data = std::make_shared<NodeData>();
  data->value = std::move(value);
  return Node(std::move(data));
}

Node Node::variable(Tensor value) {
  auto data = std::make_shared<NodeData>();
  data->value = std::move(value);
  data->requires_grad = true;
  data->ensure_grad();
  return Node(std::move(data));
}

const Tensor& Node::grad() const { return data_->ensure_grad(); }

void Node::zero_grad() { data_->ensure_grad().fill(0.0); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Node matmul(const Node& a, const Node& b) {
  require_rank2(a.value(), "matmul");
  require_rank2(b.value(), "matmul");
  if (a.shape()[1] != b.shape()[0])
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " * " +
                         shape_string(b.shape()));
  Tensor out({a.shape()[0], b.shape()[1]});
  out.mat().noalias() = a.value().mat() * b.value().mat();
  return make_result(std::move(out), {a.ptr(), b.ptr()}, [](NodeData& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) pa.ensure_grad().mat().noalias() += self.grad.mat() * pb.value.mat().transpose();
    if (pb.requires_grad) pb.ensure_grad().mat().noalias() += pa.value.mat().transpose() * self.grad.mat();
  });
}

Node add(const Node& a, const Node& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Node sub(const Node& a, const Node& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Node mul(const Node& a, const Node& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Node neg(const Node& a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Node scale(const Node& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Node sigmoid(const Node& a) {
  return unary(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Node tanh(const Node& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Node exp(const Node& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Node log(const Node& a) {
  for (double v : a.value().data())
    if (!(v > 0.0)) throw DomainError("log of non-positive value " + std::to_string(v));
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Node clamp(const Node& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Node elementwise(Elementwise op, std::span<const Node> inputs) {
  const bool is_binary = op == Elementwise::kAdd || op == Elementwise::kSub || op == Elementwise::kMul;
  if (inputs.size() != (is_binary ? 2u : 1u))
    throw ContractError("elementwise: wrong number of inputs (" + std::to_string(inputs.size()) + ")");
  switch (op) {
    case Elementwise::kAdd: return add(inputs[0], inputs[1]);
    case Elementwise::kSub: return sub(inputs[0], inputs[1]);
    case Elementwise::kMul: return mul(inputs[0], inputs[1]);
    case Elementwise::kSigmoid: return sigmoid(inputs[0]);
    case Elementwise::kTanh: return tanh(inputs[0]);
    case Elementwise::kExp: return exp(inputs[0]);
    case Elementwise::kLog: return log(inputs[0]);
    case Elementwise::kNeg: return neg(inputs[0]);
  }
  throw ContractError("elementwise: unknown op");
}

Node add_rowwise(const Node& x, const Node& bias) {
  require_rank2(x.value(), "add_rowwise");
  const std::size_t m = x.shape()[0];
  const std::size_t n = x.shape()[1];
  if (bias.size() != n || bias.value().rows() != 1)
    throw DimensionError("add_rowwise: bias " + shape_string(bias.shape()) + " vs rows of " +
                         shape_string(x.shape()));
  Tensor out = x.value();
  const double* b = bias.value().data().data();
  double* o = out.data().data();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) o[r * n + c] += b[c];
  return make_result(std::move(out), {x.ptr(), bias.ptr()}, [m, n](NodeData& self) {
    auto& px = *self.parents[0];
    auto& pb = *self.parents[1];
    const double* g = self.grad.data().data();
    if (px.requires_grad) {
      double* dx = px.ensure_grad().data().data();
      for (std::size_t i = 0; i < m * n; ++i) dx[i] += g[i];
    }
    if (pb.requires_grad) {
      double* db = pb.ensure_grad().data().data();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) db[c] += g[r * n + c];
    }
  });
}

Node concat(std::initializer_list<Node> nodes, std::size_t axis) {
  return concat(std::span<const Node>(nodes.begin(), nodes.size()), axis);
}

Node concat(std::span<const Node> nodes, std::size_t axis) {
  if (nodes.empty()) throw ContractError("concat: no inputs");
  const std::size_t rank = nodes[0].value().rank();
  if (rank > 2 || axis >= rank)
    throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for " + shape_string(nodes[0].shape()));
  for (const auto& n : nodes) {
    if (n.value().rank() != rank) throw DimensionError("concat: rank mismatch");
    if (rank == 2 && n.shape()[1 - axis] != nodes[0].shape()[1 - axis])
      throw DimensionError("concat: non-concat dimension differs, " + shape_string(n.shape()) + " vs " +
                           shape_string(nodes[0].shape()));
  }
  // Rank 1 and axis-0 concat are plain appends; axis-1 interleaves rows.
  const std::size_t rows = rank == 2 ? nodes[0].shape()[0] : 1;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& n : nodes) {
    const std::size_t w = (rank == 2 && axis == 1) ? n.shape()[1] : n.size();
    widths.push_back(w);
    total += w;
  }
  Shape shape;
  if (rank == 1) {
    shape = {total};
  } else if (axis == 0) {
    std::size_t r = 0;
    for (const auto& n : nodes) r += n.shape()[0];
    shape = {r, nodes[0].shape()[1]};
  } else {
    shape = {rows, total};
  }
  const bool interleave = rank == 2 && axis == 1;
  const std::size_t out_rows = interleave ? rows : 1;
  const std::size_t out_width = interleave ? total : element_count(shape);
  Tensor out(shape);
  double* o = out.data().data();
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double* src = nodes[k].value().data().data();
    for (std::size_t r = 0; r < out_rows; ++r)
      std::copy(src + r * widths[k], src + (r + 1) * widths[k], o + r * out_width + offset);
    offset += widths[k];
    parents.push_back(nodes[k].ptr());
  }
  return make_result(std::move(out), std::move(parents), [widths, out_rows, out_width](NodeData& self) {
    const double* g = self.grad.data().data();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      auto& p = *self.parents[k];
      if (p.requires_grad) {
        double* d = p.ensure_grad().data().data();
        for (std::size_t r = 0; r < out_rows; ++r)
          for (std::size_t c = 0; c < widths[k]; ++c) d[r * widths[k] + c] += g[r * out_width + offset + c];
      }
      offset += widths[k];
    }
  });
}

Node slice(const Node& a, std::size_t axis, std::size_t begin, std::size_t end) {
  const std::size_t rank = a.value().rank();
  if (rank > 2 || axis >= rank)
    throw DimensionError("slice: axis " + std::to_string(axis) + " invalid for " + shape_string(a.shape()));
  const std::size_t extent = a.shape()[axis];
  if (begin >= end || end > extent)
    throw IndexError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for extent " + std::to_string(extent));
  const bool columns = rank == 2 && axis == 1;
  const std::size_t rows = columns ? a.shape()[0] : 1;
  const std::size_t in_width = columns ? a.shape()[1] : a.size();
  const std::size_t stride = (rank == 2 && axis == 0) ? a.shape()[1] : 1;
  const std::size_t first = begin * stride;
  const std::size_t width = (end - begin) * stride;
  Shape shape = a.shape();
  shape[axis] = end - begin;
  Tensor out(shape);
  const double* src = a.value().data().data();
  double* o = out.data().data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(src + r * in_width + first, src + r * in_width + first + width, o + r * width);
  return make_result(std::move(out), {a.ptr()}, [rows, in_width, first, width](NodeData& self) {
    double* d = self.parents[0]->ensure_grad().data().data();
    const double* g = self.grad.data().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < width; ++c) d[r * in_width + first + c] += g[r * width + c];
  });
}

Node sum(const Node& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return make_result(Tensor::scalar(total), {a.ptr()}, [](NodeData& self) {
    const double g = self.grad[0];
    for (double& d : self.parents[0]->ensure_grad().data()) d += g;
  });
}

Node gather_rows(const Node& table, std::span<const int> ids) {
  require_rank2(table.value(), "gather_rows");
  const std::size_t n = table.shape()[1];
  const std::size_t vocab = table.shape()[0];
  std::vector<int> rows(ids.begin(), ids.end());
  for (int id : rows)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw IndexError("gather_rows: id " + std::to_string(id) + " outside [0, " + std::to_string(vocab) + ")");
  if (rows.empty()) throw ContractError("gather_rows: no ids");
  Tensor out({rows.size(), n});
  const double* src = table.value().data().data();
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(src + rows[r] * n, src + (rows[r] + 1) * n, out.data().data() + r * n);
  return make_result(std::move(out), {table.ptr()}, [rows, n](NodeData& self) {
    double* d = self.parents[0]->ensure_grad().data().data();
    const double* g = self.grad.data().data();
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < n; ++c) d[rows[r] * n + c] += g[r * n + c];
  });
}

Node softmax_cross_entropy(const Node& logits, int target) {
  if (logits.value().rows() != 1)
    throw DimensionError("softmax_cross_entropy: expected a single logit vector, got " +
                         shape_string(logits.shape()));
  if (target < 0) throw IndexError("softmax_cross_entropy: negative target " + std::to_string(target));
  const int targets[1] = {target};
  return softmax_cross_entropy(logits, std::span<const int>(targets, 1));
}

Node softmax_cross_entropy(const Node& logits, std::span<const int> targets) {
  const Tensor& v = logits.value();
  const std::size_t rows = v.rows();
  const std::size_t width = v.cols();
  if (targets.size() != rows)
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(rows) + " rows");
  std::vector<int> tgt(targets.begin(), targets.end());
  for (int t : tgt)
    if (t >= static_cast<int>(width))
      throw IndexError("softmax_cross_entropy: target " + std::to_string(t) + " outside [0, " +
                       std::to_string(width) + ")");
  // Softmax probabilities are kept for the backward pass.
  Tensor probs(v.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (tgt[r] < 0) continue;
    const double* x = v.data().data() + r * width;
    double* p = probs.data().data() + r * width;
    const double mx = *std::max_element(x, x + width);
    double z = 0.0;
    for (std::size_t c = 0; c < width; ++c) z += (p[c] = std::exp(x[c] - mx));
    for (std::size_t c = 0; c < width; ++c) p[c] /= z;
    loss += -(x[tgt[r]] - mx - std::log(z));
  }
  return make_result(Tensor::scalar(loss), {logits.ptr()},
                     [probs = std::move(probs), tgt = std::move(tgt), width](NodeData& self) {
                       const double g = self.grad[0];
                       double* d = self.parents[0]->ensure_grad().data().data();
                       for (std::size_t r = 0; r < tgt.size(); ++r) {
                         if (tgt[r] < 0) continue;
                         const double* p = probs.data().data() + r * width;
                         for (std::size_t c = 0; c < width; ++c)
                           d[r * width + c] += g * (p[c] - (static_cast<int>(c) == tgt[r] ? 1.0 : 0.0));
                       }
                     });
}

Node sigmoid_cross_entropy(const Node& logits, const Tensor& targets) {
  if (logits.shape() != targets.shape())
    throw DimensionError("sigmoid_cross_entropy: logits " + shape_string(logits.shape()) + " vs targets " +
                         shape_string(targets.shape()));
  double loss = 0.0;
  const double* x = logits.value().data().data();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    // max(x,0) - x*t + log(1 + exp(-|x|))
    loss += std::max(x[i], 0.0) - x[i] * targets[i] + std::log1p(std::exp(-std::abs(x[i])));
  }
  return make_result(Tensor::scalar(loss), {logits.ptr()}, [targets](NodeData& self) {
    const double g = self.grad[0];
    auto& parent = *self.parents[0];
    double* d = parent.ensure_grad().data().data();
    const double* x = parent.value.data().data();
    for (std::size_t i = 0; i < targets.size(); ++i) d[i] += g * (stable_sigmoid(x[i]) - targets[i]);
  });
}

void backward(const Node& root) {
  if (!root.valid() || root.size() != 1)
    throw ContractError("backward: root must be a scalar, got " +
                        (root.valid() ? shape_string(root.shape()) : std::string("null")));
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<NodeData*> order;
  std::unordered_set<NodeData*> visited;
  std::vector<std::pair<NodeData*, std::size_t>> stack{{root.ptr().get(), 0}};
  visited.insert(root.ptr().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeData* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (NodeData* n : order)
    if (!n->leaf) n->ensure_grad().fill(0.0);
  root.ptr()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward) (*it)->backward(**it);
}

}  // namespace scvae::ad

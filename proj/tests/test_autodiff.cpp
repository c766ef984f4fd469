// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "scvae/autodiff.hpp"

namespace scvae {
namespace {

using ad::Node;
using ad::Tensor;
using testing::check_gradients;
using testing::random_tensor;

TEST(Tensor, RejectsEmptyOrMismatchedShapes) {
  EXPECT_THROW(Tensor(ad::Shape{}), ad::DimensionError);
  EXPECT_THROW(Tensor(ad::Shape{2, 0}), ad::DimensionError);
  EXPECT_THROW(Tensor(ad::Shape{2, 2}, std::vector<double>{1, 2, 3}), ad::DimensionError);
  EXPECT_THROW(Tensor::matrix({{1, 2}, {3}}), ad::DimensionError);
  EXPECT_THROW(Tensor::vector({1, 2}).item(), ad::ContractError);
}

TEST(Tensor, RowMajorLayout) {
  const auto t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 0), 4.0);
  EXPECT_EQ(t.mat()(0, 2), 3.0);
  EXPECT_EQ(Tensor::vector({1, 2, 3}).rows(), 1u);
}

TEST(Matmul, IdentityAndDotProduct) {
  const auto eye = Node::constant(Tensor::matrix({{1, 0}, {0, 1}}));
  const auto m = Node::constant(Tensor::matrix({{1, 2}, {3, 4}}));
  EXPECT_EQ(ad::matmul(eye, m).value(), m.value());
  const auto r = ad::matmul(Node::constant(Tensor::matrix({{1, 2}})), Node::constant(Tensor::matrix({{3}, {4}})));
  EXPECT_EQ(r.value().item(), 11.0);
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  const auto a = Node::constant(Tensor({2, 3}));
  const auto b = Node::constant(Tensor({2, 3}));
  try {
    ad::matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const ad::DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3] * [2x3]"), std::string::npos) << e.what();
  }
}

TEST(Matmul, GradientOfSumMatchesOtherOperand) {
  auto a = Node::variable(Tensor::matrix({{1, 2}}));
  const auto b = Node::constant(Tensor::matrix({{3}, {4}}));
  ad::backward(ad::sum(ad::matmul(a, b)));
  EXPECT_NEAR(a.grad().at(0, 0), 3.0, 1e-12);
  EXPECT_NEAR(a.grad().at(0, 1), 4.0, 1e-12);

  // The same value from central differences.
  auto check = check_gradients([&] { return ad::sum(ad::matmul(a, b)); }, {a});
  EXPECT_LT(check.max_relative_error, 1e-8);
}

TEST(Elementwise, KnownValues) {
  const auto zero = Node::constant(Tensor::scalar(0.0));
  EXPECT_DOUBLE_EQ(ad::sigmoid(zero).value().item(), 0.5);
  EXPECT_DOUBLE_EQ(ad::tanh(zero).value().item(), 0.0);
  EXPECT_DOUBLE_EQ(ad::exp(zero).value().item(), 1.0);
  auto x = Node::variable(Tensor::scalar(0.0));
  ad::backward(ad::sigmoid(x));
  EXPECT_NEAR(x.grad().item(), 0.25, 1e-12);
}

TEST(Elementwise, SigmoidIsStableForLargeInputs) {
  const auto big = Node::constant(Tensor::vector({800.0, -800.0}));
  const auto s = ad::sigmoid(big).value();
  EXPECT_EQ(s[0], 1.0);
  EXPECT_EQ(s[1], 0.0);
  EXPECT_TRUE(s.all_finite());
}

TEST(Elementwise, LogOfNonPositiveIsDomainError) {
  EXPECT_THROW(ad::log(Node::constant(Tensor::vector({1.0, 0.0}))), ad::DomainError);
  EXPECT_THROW(ad::log(Node::constant(Tensor::vector({-1.0}))), ad::DomainError);
}

TEST(Elementwise, OnlyScalarBroadcasting) {
  const auto a = Node::constant(Tensor({2, 3}, 1.0));
  EXPECT_EQ(ad::add(a, Node::constant(Tensor::scalar(2.0))).value(), Tensor({2, 3}, 3.0));
  EXPECT_THROW(ad::add(a, Node::constant(Tensor({1, 3}))), ad::DimensionError);
  EXPECT_THROW(ad::mul(a, Node::constant(Tensor({3, 2}))), ad::DimensionError);
}

TEST(Elementwise, DispatchMatchesNamedOps) {
  std::mt19937_64 rng(3);
  const auto a = Node::constant(random_tensor({3, 4}, rng));
  const auto b = Node::constant(random_tensor({3, 4}, rng));
  const Node ab[] = {a, b};
  const Node one[] = {a};
  EXPECT_EQ(ad::elementwise(ad::Elementwise::kAdd, ab).value(), ad::add(a, b).value());
  EXPECT_EQ(ad::elementwise(ad::Elementwise::kSub, ab).value(), ad::sub(a, b).value());
  EXPECT_EQ(ad::elementwise(ad::Elementwise::kMul, ab).value(), ad::mul(a, b).value());
  EXPECT_EQ(ad::elementwise(ad::Elementwise::kTanh, one).value(), ad::tanh(a).value());
  EXPECT_EQ(ad::elementwise(ad::Elementwise::kNeg, one).value(), ad::neg(a).value());
  EXPECT_THROW(ad::elementwise(ad::Elementwise::kAdd, one), ad::ContractError);
}

TEST(ConcatSlice, ValuesAndRoundTrip) {
  const auto a = Node::constant(Tensor::vector({1, 2}));
  const auto b = Node::constant(Tensor::vector({3}));
  const auto ab = ad::concat({a, b}, 0);
  EXPECT_EQ(ab.value(), Tensor::vector({1, 2, 3}));
  EXPECT_EQ(ad::slice(ab, 0, 0, 2).value(), a.value());
  EXPECT_EQ(ad::slice(ab, 0, 2, 3).value(), b.value());

  std::mt19937_64 rng(5);
  const auto m = Node::constant(random_tensor({3, 2}, rng));
  const auto n = Node::constant(random_tensor({3, 5}, rng));
  const auto mn = ad::concat({m, n}, 1);
  EXPECT_EQ(ad::slice(mn, 1, 0, 2).value(), m.value());
  EXPECT_EQ(ad::slice(mn, 1, 2, 7).value(), n.value());
  const auto stacked = ad::concat({m, m}, 0);
  EXPECT_EQ(ad::slice(stacked, 0, 3, 6).value(), m.value());
}

TEST(ConcatSlice, Errors) {
  const auto a = Node::constant(Tensor::vector({1, 2, 3}));
  EXPECT_THROW(ad::slice(a, 0, 2, 4), ad::IndexError);
  EXPECT_THROW(ad::slice(a, 0, 2, 2), ad::IndexError);
  EXPECT_THROW(ad::concat({Node::constant(Tensor({2, 2})), Node::constant(Tensor({3, 3}))}, 1), ad::DimensionError);
}

TEST(ConcatSlice, GradientRoutesToOwnSegment) {
  auto a = Node::variable(Tensor::vector({1, 2}));
  auto b = Node::variable(Tensor::vector({3}));
  ad::backward(ad::sum(ad::slice(ad::concat({a, b}, 0), 0, 0, 2)));
  EXPECT_EQ(b.grad(), Tensor::vector({0}));
  EXPECT_EQ(a.grad(), Tensor::vector({1, 1}));
}

TEST(SoftmaxCrossEntropy, UniformAndConfident) {
  const auto equal = Node::constant(Tensor::vector({0.3, 0.3, 0.3, 0.3}));
  EXPECT_NEAR(ad::softmax_cross_entropy(equal, 2).value().item(), std::log(4.0), 1e-12);
  const auto sharp = Node::constant(Tensor::vector({0, 0, 1000, 0}));
  EXPECT_NEAR(ad::softmax_cross_entropy(sharp, 2).value().item(), 0.0, 1e-12);
  EXPECT_THROW(ad::softmax_cross_entropy(equal, 4), ad::IndexError);
  EXPECT_THROW(ad::softmax_cross_entropy(equal, -1), ad::IndexError);
}

TEST(SoftmaxCrossEntropy, GradientIsSoftmaxMinusOneHot) {
  std::mt19937_64 rng(7);
  auto logits = Node::variable(random_tensor({7}, rng));
  ad::backward(ad::softmax_cross_entropy(logits, 3));
  double z = 0;
  for (double v : logits.value().data()) z += std::exp(v);
  for (std::size_t i = 0; i < 7; ++i)
    EXPECT_NEAR(logits.grad()[i], std::exp(logits.value()[i]) / z - (i == 3), 1e-12);
  auto check = check_gradients([&] { return ad::softmax_cross_entropy(logits, 3); }, {logits});
  EXPECT_LT(check.max_relative_error, 1e-4);
}

TEST(SoftmaxCrossEntropy, BatchedSkipsNegativeTargets) {
  std::mt19937_64 rng(8);
  const auto logits = Node::constant(random_tensor({3, 5}, rng));
  const int targets[] = {1, -1, 4};
  const double batched = ad::softmax_cross_entropy(logits, targets).value().item();
  const double manual = ad::softmax_cross_entropy(ad::slice(logits, 0, 0, 1), 1).value().item() +
                        ad::softmax_cross_entropy(ad::slice(logits, 0, 2, 3), 4).value().item();
  EXPECT_NEAR(batched, manual, 1e-12);
}

TEST(Backward, NonScalarRootIsContractError) {
  auto x = Node::variable(Tensor::vector({1, 2}));
  EXPECT_THROW(ad::backward(ad::tanh(x)), ad::ContractError);
}

TEST(Backward, FanOutAccumulates) {
  // f(x) = x*x + x has gradient 2x + 1.
  for (double v : {-1.5, 0.0, 0.7, 2.0}) {
    auto x = Node::variable(Tensor::scalar(v));
    ad::backward(ad::add(ad::mul(x, x), x));
    EXPECT_NEAR(x.grad().item(), 2 * v + 1, 1e-12);
  }
}

TEST(Backward, RepeatedCallsAccumulateUntilZeroed) {
  auto x = Node::variable(Tensor::scalar(3.0));
  const auto y = ad::scale(x, 2.0);
  ad::backward(y);
  ad::backward(y);
  EXPECT_DOUBLE_EQ(x.grad().item(), 4.0);
  x.zero_grad();
  ad::backward(y);
  EXPECT_DOUBLE_EQ(x.grad().item(), 2.0);
}

TEST(Backward, NoGradGuardRecordsNothing) {
  auto x = Node::variable(Tensor::scalar(1.0));
  Node y;
  {
    ad::NoGradGuard guard;
    EXPECT_FALSE(ad::grad_enabled());
    y = ad::tanh(x);
  }
  EXPECT_TRUE(ad::grad_enabled());
  EXPECT_FALSE(y.requires_grad());
}

// Every differentiable op against central differences on 100 random inputs
// drawn from [-2, 2].
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const int op = GetParam();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(1000 * op + trial);
    auto a = Node::variable(random_tensor({2, 3}, rng));
    auto b = Node::variable(random_tensor({2, 3}, rng));
    auto w = Node::variable(random_tensor({3, 4}, rng));
    auto bias = Node::variable(random_tensor({1, 3}, rng));
    auto pos = Node::variable(random_tensor({2, 3}, rng, 0.5, 2.0));
    auto table = Node::variable(random_tensor({5, 3}, rng));
    const Tensor bits = random_tensor({2, 3}, rng, 0.0, 1.0);
    // A random projection keeps the loss sensitive to every entry.
    const auto weights = Node::constant(random_tensor({2, 3}, rng));
    const auto weigh = [&](const Node& n) { return ad::sum(ad::mul(n, weights)); };
    std::function<Node()> f;
    std::vector<Node> leaves;
    switch (op) {
      case 0: f = [&] { return ad::sum(ad::matmul(a, w)); }; leaves = {a, w}; break;
      case 1: f = [&] { return weigh(ad::add(a, b)); }; leaves = {a, b}; break;
      case 2: f = [&] { return weigh(ad::sub(a, b)); }; leaves = {a, b}; break;
      case 3: f = [&] { return weigh(ad::mul(a, b)); }; leaves = {a, b}; break;
      case 4: f = [&] { return weigh(ad::sigmoid(a)); }; leaves = {a}; break;
      case 5: f = [&] { return weigh(ad::tanh(a)); }; leaves = {a}; break;
      case 6: f = [&] { return weigh(ad::exp(a)); }; leaves = {a}; break;
      case 7: f = [&] { return weigh(ad::log(pos)); }; leaves = {pos}; break;
      case 8: f = [&] { return weigh(ad::neg(a)); }; leaves = {a}; break;
      case 9: f = [&] { return weigh(ad::add_rowwise(a, bias)); }; leaves = {a, bias}; break;
      case 10: f = [&] { return weigh(ad::slice(ad::concat({a, b}, 1), 1, 2, 5)); }; leaves = {a, b}; break;
      case 11: {
        static const int ids[] = {4, 1};
        f = [&] { return weigh(ad::gather_rows(table, ids)); };
        leaves = {table};
        break;
      }
      case 12: {
        static const int targets[] = {2, 0};
        f = [&] { return ad::softmax_cross_entropy(a, targets); };
        leaves = {a};
        break;
      }
      case 13: f = [&] { return ad::sigmoid_cross_entropy(a, bits); }; leaves = {a}; break;
      case 14: f = [&] { return weigh(ad::scale(ad::mul(a, ad::add(a, b)), 0.5)); }; leaves = {a, b}; break;
      case 15: f = [&] { return weigh(ad::clamp(a, -1.0, 1.0)); }; leaves = {a}; break;
    }
    worst = std::max(worst, check_gradients(f, leaves).max_relative_error);
  }
  EXPECT_LT(worst, 1e-4) << "op " << op;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range(0, 16));

TEST(Determinism, SameInputsSameBits) {
  std::mt19937_64 r1(11), r2(11);
  const auto a1 = Node::constant(random_tensor({4, 4}, r1));
  const auto a2 = Node::constant(random_tensor({4, 4}, r2));
  EXPECT_EQ(ad::tanh(ad::matmul(a1, a1)).value(), ad::tanh(ad::matmul(a2, a2)).value());
}

}  // namespace
}  // namespace scvae

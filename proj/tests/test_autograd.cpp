// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "ttsa/error.hpp"

namespace ttsa {
namespace {

using testing::gradcheck;
using testing::random_tensor;
using testing::weighted_sum;
using Vars = std::vector<ag::Var>;

constexpr double kTol = 1e-3;

TEST(Autograd, ElementwiseGradients) {
  Rng rng(1);
  Tensor a = random_tensor({3, 4}, rng), b = random_tensor({3, 4}, rng);
  Tensor pos = a;
  for (double& v : pos.values()) v = std::abs(v) + 0.5;
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::add(v[0], v[1])); }, {a, b}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::sub(v[0], v[1])); }, {a, b}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::mul(v[0], v[1])); }, {a, b}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::div(v[0], v[1])); }, {a, pos}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::scale(ag::add_scalar(v[0], 2.0), -3.0)); }, {a}),
            kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::relu(v[0])); }, {a}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::leaky_relu(v[0], 0.2)); }, {a}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::tanh(v[0])); }, {a}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::sigmoid(v[0])); }, {a}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::exp(v[0])); }, {a}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::log(v[0])); }, {pos}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::sqrt(v[0])); }, {pos}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::abs(v[0])); }, {a}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::square(v[0])); }, {a}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::clamp_min(v[0], 0.1)); }, {a}), kTol);
}

TEST(Autograd, ReductionAndBroadcastGradients) {
  Rng rng(2);
  Tensor x = random_tensor({3, 5}, rng), c = random_tensor({3, 1}, rng);
  EXPECT_LT(gradcheck([](const Vars& v) { return ag::mean(ag::square(v[0])); }, {x}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::mean_over_time(v[0])); }, {x}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::add_channel(v[0], v[1])); }, {x, c}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::mul_channel(v[0], v[1])); }, {x, c}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::slice_time(v[0], 1, 4)); }, {x}), kTol);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::gather(v[0], {0, 0, 7, -1, 14}, {5})); }, {x}),
            kTol);
}

TEST(Autograd, MatmulLayerNormEmbedding) {
  Rng rng(3);
  Tensor a = random_tensor({4, 3}, rng), b = random_tensor({3, 5}, rng);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::matmul(v[0], v[1])); }, {a, b}), kTol);
  Tensor x = random_tensor({6, 4}, rng), g = random_tensor({6}, rng), be = random_tensor({6}, rng);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::layer_norm_channels(v[0], v[1], v[2])); },
                      {x, g, be}),
            kTol);
  Tensor table = random_tensor({5, 3}, rng);
  const std::vector<int> ids = {4, 1, 4};
  EXPECT_LT(gradcheck([&ids](const Vars& v) { return weighted_sum(ag::embedding(v[0], ids)); }, {table}), kTol);
}

TEST(Autograd, EmbeddingMarksTouchedRows) {
  ag::Var table = ag::leaf(Tensor({4, 2}, 1.0), true);
  const std::vector<int> ids = {2, 0, 2};
  ag::backward(ag::sum(ag::embedding(table, ids)));
  const auto& touched = table.node()->touched_rows;
  ASSERT_EQ(touched.size(), 4u);
  EXPECT_TRUE(touched[0]);
  EXPECT_FALSE(touched[1]);
  EXPECT_TRUE(touched[2]);
  EXPECT_FALSE(touched[3]);
  EXPECT_DOUBLE_EQ(table.grad().at(2, 1), 2.0);
}

TEST(Autograd, SoftmaxFamilyGradients) {
  Rng rng(4);
  Tensor logits = random_tensor({5, 4}, rng);
  const std::vector<int> targets = {0, 4, 2, 2};
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::log_softmax_channels(v[0])); }, {logits}), kTol);
  EXPECT_LT(gradcheck([&targets](const Vars& v) { return ag::cross_entropy_channels(v[0], targets); }, {logits}),
            kTol);
  const std::vector<int> labels = {1, 3, 3};
  EXPECT_LT(gradcheck([&labels](const Vars& v) { return ag::ctc_loss(ag::log_softmax_channels(v[0]), labels, 0); },
                      {random_tensor({5, 7}, rng)}),
            kTol);
}

TEST(Autograd, CtcInfeasibleLabelsThrow) {
  ag::Var lp = ag::log_softmax_channels(ag::constant(Tensor({3, 2})));
  const std::vector<int> labels = {1, 1};  // needs a blank between repeats: 3 frames
  try {
    ag::ctc_loss(lp, labels, 0);
    FAIL() << "expected ctc-infeasible";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "ctc-infeasible");
  }
}

TEST(Autograd, SpectralGradient) {
  Rng rng(5);
  EXPECT_LT(gradcheck([](const Vars& v) { return weighted_sum(ag::rfft_magnitude(v[0])); },
                      {random_tensor({8, 3}, rng)}),
            kTol);
}

TEST(Autograd, SharedSubexpressionAccumulates) {
  ag::Var x = ag::leaf(Tensor({1}, std::vector<double>{3.0}), true);
  ag::Var y = ag::mul(x, x);
  ag::backward(ag::add(y, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
}

TEST(Autograd, ConstantsBuildNoGraph) {
  ag::Var a = ag::constant(Tensor({2}, 1.0));
  ag::Var b = ag::add(a, a);
  EXPECT_FALSE(b.requires_grad());
  EXPECT_TRUE(b.node()->inputs.empty());
}

TEST(Autograd, ShapeMismatchThrows) {
  try {
    ag::add(ag::constant(Tensor({2})), ag::constant(Tensor({3})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), "shape-mismatch");
  }
}

}  // namespace
}  // namespace ttsa

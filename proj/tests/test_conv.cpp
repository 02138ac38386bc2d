// Copyright 2026 The ttsa Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace ttsa {
namespace {

using testing::gradcheck;
using testing::random_tensor;
using testing::weighted_sum;
using Vars = std::vector<ag::Var>;

// Explicit sliding-window sums.
Tensor naive_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, const ag::Conv1dOptions& o) {
  const int cin = x.dim(0), t = x.dim(1), cout = w.dim(0), k = w.dim(2), g = o.groups;
  const int cin_g = cin / g, cout_g = cout / g;
  const int span = (k - 1) * o.dilation + 1;
  const int tout = (t + o.pad_left + o.pad_right - span) / o.stride + 1;
  Tensor y({cout, tout});
  for (int co = 0; co < cout; ++co) {
    const int grp = co / cout_g;
    for (int to = 0; to < tout; ++to) {
      double acc = b.empty() ? 0.0 : b[static_cast<std::size_t>(co)];
      for (int ci = 0; ci < cin_g; ++ci)
        for (int kk = 0; kk < k; ++kk) {
          const int ti = to * o.stride + kk * o.dilation - o.pad_left;
          if (ti < 0 || ti >= t) continue;
          acc += w[(static_cast<std::size_t>(co) * cin_g + ci) * k + kk] * x.at(grp * cin_g + ci, ti);
        }
      y.at(co, to) = acc;
    }
  }
  return y;
}

Tensor naive_conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int padding) {
  const int cin = x.dim(0), t = x.dim(1), cout = w.dim(1), k = w.dim(2);
  const int full = (t - 1) * stride + k;
  Tensor y({cout, full - 2 * padding});
  for (int co = 0; co < cout; ++co)
    for (int to = 0; to < y.dim(1); ++to) y.at(co, to) = b[static_cast<std::size_t>(co)];
  for (int ci = 0; ci < cin; ++ci)
    for (int ti = 0; ti < t; ++ti)
      for (int co = 0; co < cout; ++co)
        for (int kk = 0; kk < k; ++kk) {
          const int to = ti * stride + kk - padding;
          if (to < 0 || to >= y.dim(1)) continue;
          y.at(co, to) += x.at(ci, ti) * w[(static_cast<std::size_t>(ci) * cout + co) * k + kk];
        }
  return y;
}

struct Conv1dCase {
  int cin, cout, k, t;
  ag::Conv1dOptions opt;
};

TEST(Conv1d, MatchesNaiveOracle) {
  const std::vector<Conv1dCase> cases = {
      {3, 4, 3, 9, {1, 1, 1, 1, 1}},  {4, 4, 5, 11, {1, 1, 4, 2, 2}}, {6, 4, 3, 10, {1, 3, 2, 3, 3}},
      {5, 7, 1, 6, {1, 1, 1, 0, 0}},  {2, 3, 4, 13, {3, 1, 1, 1, 2}}, {4, 2, 3, 7, {2, 2, 1, 0, 0}},
  };
  Rng rng(10);
  for (const auto& c : cases) {
    Tensor x = random_tensor({c.cin, c.t}, rng);
    Tensor w = random_tensor({c.cout, c.cin / c.opt.groups, c.k}, rng);
    Tensor b = random_tensor({c.cout}, rng);
    Tensor got = ag::conv1d(ag::constant(x), ag::constant(w), ag::constant(b), c.opt).value();
    EXPECT_LT(max_abs_diff(got, naive_conv1d(x, w, b, c.opt)), 1e-10);
    EXPECT_LT(gradcheck(
                  [&c](const Vars& v) { return weighted_sum(ag::conv1d(v[0], v[1], v[2], c.opt)); }, {x, w, b}),
              1e-3);
  }
}

TEST(ConvTranspose1d, MatchesNaiveOracle) {
  Rng rng(11);
  for (int stride : {2, 4}) {
    Tensor x = random_tensor({3, 5}, rng);
    Tensor w = random_tensor({3, 2, 2 * stride}, rng);
    Tensor b = random_tensor({2}, rng);
    ag::Var y = ag::conv_transpose1d(ag::constant(x), ag::constant(w), ag::constant(b), stride, stride / 2);
    EXPECT_EQ(y.dim(1), 5 * stride);
    EXPECT_LT(max_abs_diff(y.value(), naive_conv_transpose1d(x, w, b, stride, stride / 2)), 1e-10);
    EXPECT_LT(gradcheck(
                  [stride](const Vars& v) {
                    return weighted_sum(ag::conv_transpose1d(v[0], v[1], v[2], stride, stride / 2));
                  },
                  {x, w, b}),
              1e-3);
  }
}

TEST(Conv2d, MatchesNaiveOracle) {
  Rng rng(12);
  Tensor x = random_tensor({2, 7, 5}, rng);
  Tensor w = random_tensor({3, 2, 3, 2}, rng);
  Tensor b = random_tensor({3}, rng);
  ag::Conv2dOptions o{2, 1, 1, 0};
  Tensor got = ag::conv2d(ag::constant(x), ag::constant(w), ag::constant(b), o).value();
  const int ho = (7 + 2 - 3) / 2 + 1, wo = 5 - 2 + 1;
  ASSERT_EQ(got.shape(), (Shape{3, ho, wo}));
  for (int co = 0; co < 3; ++co)
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j) {
        double acc = b[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < 2; ++ci)
          for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 2; ++c) {
              const int hi = i * 2 + a - 1, wi = j + c;
              if (hi < 0 || hi >= 7) continue;
              acc += w[((static_cast<std::size_t>(co) * 2 + ci) * 3 + a) * 2 + c] *
                     x[(static_cast<std::size_t>(ci) * 7 + hi) * 5 + wi];
            }
        EXPECT_NEAR(got[(static_cast<std::size_t>(co) * ho + i) * wo + j], acc, 1e-10);
      }
  EXPECT_LT(gradcheck([&o](const Vars& v) { return weighted_sum(ag::conv2d(v[0], v[1], v[2], o)); }, {x, w, b}),
            1e-3);
}

}  // namespace
}  // namespace ttsa

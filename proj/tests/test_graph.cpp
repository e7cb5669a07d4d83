// Copyright 2026  mtts authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mtts/gradcheck.hpp"
#include "mtts/graph.hpp"
#include "mtts/rng.hpp"

namespace mtts {
namespace {

using G = Graph<double>;

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0,
                             double hi = 1.0) {
  Tensor<double> t(std::move(s));
  for (auto& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

TEST(GraphForward, SoftmaxUniform) {
  G g;
  auto x = g.input(Tensor<double>({3}, {0.0, 0.0, 0.0}), false);
  auto y = g.softmax(x);
  for (double v : g.value(y).data) EXPECT_DOUBLE_EQ(v, 1.0 / 3.0);
}

TEST(GraphForward, SoftmaxMasked) {
  G g;
  auto x = g.input(Tensor<double>({4}, {1.0, 5.0, 1.0, 2.0}), false);
  auto y = g.softmax(x, {1, 0, 1, 1});
  const auto& v = g.value(y).data;
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  EXPECT_NEAR(v[0] + v[2] + v[3], 1.0, 1e-12);
}

TEST(GraphForward, SoftmaxFullyMaskedThrows) {
  G g;
  auto x = g.input(Tensor<double>({2}, {1.0, 2.0}), false);
  EXPECT_THROW(g.softmax(x, {0, 0}), NumericError);
}

TEST(GraphForward, MatmulIdentity) {
  G g;
  Tensor<double> eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Rng rng(7);
  auto a = random_tensor({3, 4}, rng);
  auto id = g.input(eye, false);
  auto x = g.input(a, false);
  auto y = g.matmul(id, x);
  EXPECT_TRUE(bit_equal(g.value(y), a));
}

TEST(GraphForward, MatmulShapeMismatchReportsBoth) {
  G g;
  auto a = g.input(Tensor<double>({2, 3}), false);
  auto b = g.input(Tensor<double>({2, 3}), false);
  try {
    g.matmul(a, b);
    FAIL() << "expected shape error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
  }
}

TEST(GraphBackward, MseGradientHandValue) {
  // d/dx mean((x - 0)^2) at x = [2] is 2x/N = [4]
  G g;
  auto x = g.input(Tensor<double>({1}, {2.0}), true);
  auto zero = g.input(Tensor<double>({1}, {0.0}), false);
  auto loss = g.mse(x, zero);
  EXPECT_DOUBLE_EQ(g.value(loss).data[0], 4.0);
  g.backward(loss);
  EXPECT_DOUBLE_EQ(g.grad(x).data[0], 4.0);
}

TEST(GraphBackward, SumGivesOnes) {
  G g;
  Rng rng(1);
  auto x = g.input(random_tensor({3, 2}, rng), true);
  auto loss = g.sum_all(x);
  g.backward(loss);
  for (double v : g.grad(x).data) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(GraphBackward, UnusedParameterGetsZeroGradient) {
  G g;
  Rng rng(2);
  auto used = g.input(random_tensor({2, 2}, rng), true);
  auto unused = g.input(random_tensor({4, 4}, rng), true);
  auto loss = g.sum_all(used);
  g.backward(loss);
  for (double v : g.grad(unused).data) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(GraphBackward, NonScalarLossThrows) {
  G g;
  auto x = g.input(Tensor<double>({2}, {1.0, 2.0}), true);
  EXPECT_THROW(g.backward(x), ValidationError);
}

TEST(GraphBackward, EmbeddingMatchesOneHotMatmul) {
  // row gradient must equal the gradient of the dense one-hot formulation
  Rng rng(3);
  auto table = random_tensor({5, 3}, rng);
  const std::vector<std::size_t> ids = {1, 3, 1, 0};

  G g1;
  auto t1 = g1.input(table, true);
  auto emb = g1.embedding(t1, ids);
  auto target1 = g1.input(Tensor<double>::zeros({4, 3}), false);
  auto loss1 = g1.mse(emb, target1);
  g1.backward(loss1);

  G g2;
  auto t2 = g2.input(table, true);
  Tensor<double> onehot({4, 5});
  for (std::size_t i = 0; i < ids.size(); ++i) onehot.at(i, ids[i]) = 1.0;
  auto sel = g2.matmul(g2.input(onehot, false), t2);
  auto target2 = g2.input(Tensor<double>::zeros({4, 3}), false);
  auto loss2 = g2.mse(sel, target2);
  g2.backward(loss2);

  EXPECT_TRUE(bit_equal(g1.grad(t1), g2.grad(t2)));
}

// ---- finite-difference checks per primitive ----

TEST(GradCheck, LinearLayer) {
  Rng rng(10);
  std::vector<Tensor<double>> inputs = {random_tensor({3, 4}, rng),
                                        random_tensor({4, 2}, rng),
                                        random_tensor({2}, rng)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto y = g.add_row(g.matmul(in[0], in[1]), in[2]);
    auto t = g.input(Tensor<double>::zeros({3, 2}), false);
    return g.mse(y, t);
  });
  EXPECT_LT(err, 1e-7);
}

TEST(GradCheck, ElementwiseChain) {
  Rng rng(11);
  std::vector<Tensor<double>> inputs = {random_tensor({2, 3}, rng),
                                        random_tensor({2, 3}, rng)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto y = g.mul(g.tanh_(in[0]), g.sigmoid(in[1]));
    return g.sum_all(g.mul(y, y));
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, ReluAwayFromKink) {
  Rng rng(12);
  Tensor<double> x({3, 3});
  for (auto& v : x.data) {
    v = rng.uniform(0.2, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  }
  auto err = grad_check({x}, [](G& g, const std::vector<G::Id>& in) {
    auto t = g.input(Tensor<double>::full({3, 3}, 0.3), false);
    return g.mse(g.relu(in[0]), t);
  });
  EXPECT_LT(err, 1e-7);
}

TEST(GradCheck, SoftmaxMseChain) {
  Rng rng(13);
  std::vector<Tensor<double>> inputs = {random_tensor({2, 5}, rng, -2, 2)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto t = g.input(Tensor<double>::full({2, 5}, 0.2), false);
    return g.mse(g.softmax(in[0]), t);
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, MaskedSoftmax) {
  Rng rng(14);
  std::vector<Tensor<double>> inputs = {random_tensor({1, 4}, rng, -2, 2)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto y = g.softmax(in[0], {1, 1, 0, 1});
    auto t = g.input(Tensor<double>::full({1, 4}, 0.25), false);
    return g.mse(y, t);
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, ConcatSliceReshapeTranspose) {
  Rng rng(15);
  std::vector<Tensor<double>> inputs = {random_tensor({2, 3}, rng),
                                        random_tensor({2, 2}, rng)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto c = g.concat({in[0], in[1]}, 1);        // {2,5}
    auto s = g.slice(c, 1, 1, 3);                // {2,3}
    auto r = g.reshape(s, {3, 2});
    auto tr = g.transpose(r);                    // {2,3}
    auto t = g.input(Tensor<double>::full({2, 3}, 0.1), false);
    return g.mse(tr, t);
  });
  EXPECT_LT(err, 1e-7);
}

TEST(GradCheck, ConcatAxis0) {
  Rng rng(16);
  std::vector<Tensor<double>> inputs = {random_tensor({1, 3}, rng),
                                        random_tensor({2, 3}, rng)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto c = g.concat({in[0], in[1]}, 0);  // {3,3}
    auto t = g.input(Tensor<double>::zeros({3, 3}), false);
    return g.mse(c, t);
  });
  EXPECT_LT(err, 1e-7);
}

TEST(GradCheck, Conv1d) {
  Rng rng(17);
  std::vector<Tensor<double>> inputs = {random_tensor({6, 3}, rng),
                                        random_tensor({5, 3, 2}, rng)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto y = g.conv1d(in[0], in[1]);
    auto t = g.input(Tensor<double>::full({6, 2}, 0.05), false);
    return g.mse(y, t);
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, Conv1dKeepsLength) {
  G g;
  Rng rng(18);
  auto x = g.input(random_tensor({7, 2}, rng), false);
  auto w = g.input(random_tensor({5, 2, 4}, rng), false);
  auto y = g.conv1d(x, w);
  EXPECT_EQ(g.value(y).shape, (Shape{7, 4}));
}

TEST(GradCheck, EmbeddingLookup) {
  Rng rng(19);
  std::vector<Tensor<double>> inputs = {random_tensor({6, 4}, rng)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto y = g.embedding(in[0], {0, 2, 2, 5});
    auto t = g.input(Tensor<double>::zeros({4, 4}), false);
    return g.mse(y, t);
  });
  EXPECT_LT(err, 1e-7);
}

TEST(GradCheck, LstmStep) {
  Rng rng(20);
  std::vector<Tensor<double>> inputs = {
      random_tensor({1, 3}, rng),   // x
      random_tensor({1, 4}, rng),   // h
      random_tensor({1, 4}, rng),   // c
      random_tensor({3, 16}, rng),  // w_ih
      random_tensor({4, 16}, rng),  // w_hh
      random_tensor({16}, rng),     // b
  };
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto [h, c] = lstm_step(g, in[0], in[1], in[2], in[3], in[4], in[5]);
    auto t = g.input(Tensor<double>::full({1, 4}, 0.1), false);
    return g.add(g.mse(h, t), g.mse(c, t));
  });
  EXPECT_LT(err, 1e-5);
}

TEST(GradCheck, ShiftAndNormalize) {
  Rng rng(21);
  std::vector<Tensor<double>> inputs = {random_tensor({1, 5}, rng, 0.1, 1.0)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto y = g.normalize_sum(g.add(in[0], g.shift_right(in[0])));
    auto t = g.input(Tensor<double>::full({1, 5}, 0.2), false);
    return g.mse(y, t);
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, BceWithLogits) {
  Rng rng(22);
  std::vector<Tensor<double>> inputs = {random_tensor({4, 1}, rng, -2, 2)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    return g.bce_with_logits(in[0], {1.0, 0.0, 0.0, 1.0}, 3.0);
  });
  EXPECT_LT(err, 1e-6);
}

TEST(GradCheck, ScaleAndAdd) {
  Rng rng(23);
  std::vector<Tensor<double>> inputs = {random_tensor({3}, rng),
                                        random_tensor({3}, rng)};
  auto err = grad_check(inputs, [](G& g, const std::vector<G::Id>& in) {
    auto y = g.add(g.scale(in[0], 2.5), in[1]);
    return g.sum_all(g.mul(y, y));
  });
  EXPECT_LT(err, 1e-7);
}

TEST(Graph, NormalizeSumDegenerateThrows) {
  G g;
  auto x = g.input(Tensor<double>({1, 3}, {0.0, 0.0, 0.0}), false);
  EXPECT_THROW(g.normalize_sum(x), NumericError);
}

}  // namespace
}  // namespace mtts

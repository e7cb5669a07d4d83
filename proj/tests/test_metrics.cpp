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

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mtts/metrics.hpp"
#include "mtts/rng.hpp"

namespace mtts {
namespace {

// Independent oracle: exhaustive minimum edit distance by plain recursion
// over all edit scripts. Exponential, fine for the tiny cases it sees.
std::size_t brute_min_edits(const std::vector<int>& ref,
                            const std::vector<int>& hyp, std::size_t i = 0,
                            std::size_t j = 0) {
  if (i == ref.size()) return hyp.size() - j;
  if (j == hyp.size()) return ref.size() - i;
  std::size_t best = brute_min_edits(ref, hyp, i + 1, j + 1) +
                     (ref[i] == hyp[j] ? 0 : 1);
  best = std::min(best, brute_min_edits(ref, hyp, i + 1, j) + 1);
  best = std::min(best, brute_min_edits(ref, hyp, i, j + 1) + 1);
  return best;
}

TEST(Wer, IdenticalSequences) {
  const std::vector<std::string> a = {"a", "b", "c"};
  EXPECT_DOUBLE_EQ(wer(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mer(a, a), 0.0);
}

TEST(Wer, OneSubstitution) {
  const std::vector<std::string> ref = {"a", "b", "c"};
  const std::vector<std::string> hyp = {"a", "x", "c"};
  EXPECT_DOUBLE_EQ(wer(ref, hyp), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(mer(ref, hyp), 1.0 / 3.0);
  const auto c = edit_align(ref, hyp);
  EXPECT_EQ(c.substitutions, 1u);
  EXPECT_EQ(c.matches, 2u);
}

TEST(Wer, InsertionShowsMerBelowWer) {
  const std::vector<std::string> ref = {"a", "b"};
  const std::vector<std::string> hyp = {"a", "x", "b"};
  EXPECT_DOUBLE_EQ(wer(ref, hyp), 0.5);
  EXPECT_DOUBLE_EQ(mer(ref, hyp), 1.0 / 3.0);
}

TEST(Wer, EmptyRefThrows) {
  const std::vector<std::string> empty;
  const std::vector<std::string> hyp = {"a"};
  EXPECT_THROW(wer(empty, hyp), ValidationError);
}

TEST(Mer, BothEmptyThrows) {
  const std::vector<std::string> empty;
  EXPECT_THROW(mer(empty, empty), ValidationError);
}

TEST(Mer, EmptyHypIsTotalDeletion) {
  const std::vector<std::string> ref = {"a", "b"};
  const std::vector<std::string> empty;
  EXPECT_DOUBLE_EQ(wer(ref, empty), 1.0);
  EXPECT_DOUBLE_EQ(mer(ref, empty), 1.0);
}

TEST(Wer, CanExceedOneOnInsertionHeavyHyp) {
  const std::vector<std::string> ref = {"a"};
  const std::vector<std::string> hyp = {"x", "y", "z"};
  EXPECT_GT(wer(ref, hyp), 1.0);
  EXPECT_LE(mer(ref, hyp), 1.0);
}

TEST(Wer, MatchesBruteForceOn200RandomCases) {
  Rng rng(4242);
  for (int trial = 0; trial < 220; ++trial) {
    std::vector<int> ref, hyp;
    const std::size_t nr = 1 + rng.uniform_index(6);
    const std::size_t nh = rng.uniform_index(7);
    for (std::size_t i = 0; i < nr; ++i) ref.push_back(int(rng.uniform_index(3)));
    for (std::size_t j = 0; j < nh; ++j) hyp.push_back(int(rng.uniform_index(3)));
    const std::size_t brute = brute_min_edits(ref, hyp);
    const auto counts = edit_align(ref, hyp);
    EXPECT_EQ(counts.errors(), brute) << "trial " << trial;
    EXPECT_DOUBLE_EQ(wer(ref, hyp), double(brute) / double(ref.size()))
        << "trial " << trial;
    const double m = mer(ref, hyp);
    EXPECT_LE(m, wer(ref, hyp) + 1e-15) << "trial " << trial;
    EXPECT_LE(m, 1.0) << "trial " << trial;
    // counts must be internally consistent
    EXPECT_EQ(counts.substitutions + counts.deletions + counts.matches,
              ref.size());
    EXPECT_EQ(counts.substitutions + counts.insertions + counts.matches,
              hyp.size());
  }
}

TEST(Mcd, IdenticalIsZero) {
  Rng rng(1);
  auto a = Tensor<double>::gaussian({6, 8}, rng, 1.0);
  EXPECT_DOUBLE_EQ(mcd(a, a, 5), 0.0);
}

TEST(Mcd, UnitCepstralDifferenceClosedForm) {
  // frames whose cepstra differ by exactly 1.0 in one coefficient give
  // (10/ln10)*sqrt(2) per frame
  const std::size_t m = 8;
  Tensor<double> ref({3, m});
  Tensor<double> syn({3, m});
  // build a frame difference equal to the k=2 DCT basis vector, scaled so
  // the orthonormal coefficient difference is exactly 1
  const double pi = 3.14159265358979323846;
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t n = 0; n < m; ++n) {
      const double basis = std::sqrt(2.0 / m) *
                           std::cos(pi * (2.0 * n + 1.0) * 2.0 / (2.0 * m));
      syn.at(t, n) = ref.at(t, n) + basis;  // coefficient 2 shifts by 1
    }
  const double expect = (10.0 / std::log(10.0)) * std::sqrt(2.0);
  EXPECT_NEAR(mcd(ref, syn, 5), expect, 1e-6);
  EXPECT_NEAR(expect, 6.1418, 5e-4);
}

TEST(Mcd, SymmetricInArguments) {
  Rng rng(2);
  auto a = Tensor<double>::gaussian({4, 8}, rng, 1.0);
  auto b = Tensor<double>::gaussian({4, 8}, rng, 1.0);
  EXPECT_NEAR(mcd(a, b, 6), mcd(b, a, 6), 1e-12);
}

TEST(Mcd, LinearUnderUniformScaling) {
  Rng rng(3);
  auto a = Tensor<double>::gaussian({4, 8}, rng, 1.0);
  auto b = a;
  auto c = a;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    b.data[i] += 0.3 * rng.uniform(-1, 1);
  }
  for (std::size_t i = 0; i < a.numel(); ++i)
    c.data[i] = a.data[i] + 2.0 * (b.data[i] - a.data[i]);
  EXPECT_NEAR(mcd(a, c, 6), 2.0 * mcd(a, b, 6), 1e-9);
}

TEST(Mcd, ConstantOffsetInvisible) {
  // coefficient 0 is excluded, so per-frame constant offsets (loudness)
  // do not register
  Rng rng(4);
  auto a = Tensor<double>::gaussian({5, 8}, rng, 1.0);
  auto b = a;
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c = 0; c < 8; ++c) b.at(t, c) += 3.7;
  EXPECT_NEAR(mcd(a, b, 7), 0.0, 1e-9);
}

TEST(Mcd, ShapeMismatchThrows) {
  Tensor<double> a({3, 8});
  Tensor<double> b({4, 8});
  EXPECT_THROW(mcd(a, b, 5), ValidationError);
}

TEST(Mcd, OrderMustBeBelowChannels) {
  Tensor<double> a({3, 8});
  EXPECT_THROW(mcd(a, a, 8), ValidationError);
}

TEST(Spread, IdenticalRowsZero) {
  Tensor<float> t({3, 4});
  EXPECT_DOUBLE_EQ(embedding_spread(t, {0, 1, 2}), 0.0);
}

TEST(Spread, UnitBasisRows) {
  Tensor<float> t({2, 2});
  t.at(0, 0) = 1.0f;
  t.at(1, 1) = 1.0f;
  EXPECT_NEAR(embedding_spread(t, {0, 1}), std::sqrt(2.0), 1e-7);
}

TEST(Spread, NeedsTwoRows) {
  Tensor<float> t({3, 4});
  EXPECT_THROW(embedding_spread(t, {1}), ValidationError);
}

}  // namespace
}  // namespace mtts

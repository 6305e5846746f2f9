// Copyright 2026 The MORF Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "morf/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace morf {
namespace {

TEST(Confusion, Examples) {
  const IndexMatrix m = confusion({1, 2, 2}, {1, 1, 2}, 2);
  IndexMatrix expected(2, 2);
  expected << 1, 1, 0, 1;
  EXPECT_EQ(m, expected);
  EXPECT_EQ(confusion({}, {}, 3), IndexMatrix::Zero(3, 3));
  EXPECT_EQ(confusion({1, 2, 3}, {1, 2, 3}, 3), IndexMatrix::Identity(3, 3));
  EXPECT_THROW(confusion({1}, {1, 2}, 2), Error);
  EXPECT_THROW(confusion({4}, {1}, 3), Error);
  EXPECT_DOUBLE_EQ(accuracy(m), 2.0 / 3.0);
  EXPECT_EQ(accuracy(IndexMatrix::Zero(2, 2)), 0.0);
}

TEST(Prf1, Examples) {
  IndexMatrix m(2, 2);
  m << 1, 1, 0, 1;
  const ClassScores s = prf1(m, 2);
  EXPECT_DOUBLE_EQ(s.precision, 0.5);
  EXPECT_DOUBLE_EQ(s.recall, 1.0);
  EXPECT_NEAR(s.f1, 2.0 / 3.0, 1e-15);

  const ClassScores d = prf1(IndexMatrix::Identity(3, 3) * 4, 2);
  EXPECT_EQ(d.precision, 1.0);
  EXPECT_EQ(d.recall, 1.0);
  EXPECT_EQ(d.f1, 1.0);

  IndexMatrix never(2, 2);
  never << 3, 0, 2, 0;
  const ClassScores n = prf1(never, 2);
  EXPECT_TRUE(n.precision_undefined);
  EXPECT_EQ(n.precision, 0.0);
  EXPECT_EQ(n.f1, 0.0);
}

TEST(Report, AggregatesTreeVariance) {
  const MetricsReport r = make_report({1, 2, 3}, {1, 2, 2}, 3, {0.0, 1.0, 0.5}, "corf", 3);
  EXPECT_DOUBLE_EQ(r.accuracy, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.tree_variance, 0.5);
  EXPECT_EQ(r.per_class.size(), 3u);
  EXPECT_EQ(r.samples, 3);
}

TEST(Wilcoxon, AllPositiveFive) {
  const WilcoxonResult r = wilcoxon_signed_rank({2, 3, 4, 5, 6}, {1, 1, 1, 1, 1});
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_TRUE(r.exact);
  EXPECT_DOUBLE_EQ(r.p_value, 0.0625);
}

TEST(Wilcoxon, DegenerateAndSymmetric) {
  const WilcoxonResult same = wilcoxon_signed_rank({1, 2, 3}, {1, 2, 3});
  EXPECT_TRUE(same.degenerate);
  EXPECT_EQ(same.p_value, 1.0);
  const std::vector<Scalar> a{1.0, 2.5, 0.3, 4.0, 2.0, 1.1};
  const std::vector<Scalar> b{0.5, 3.0, 0.3, 1.0, 2.2, 0.0};
  const WilcoxonResult ab = wilcoxon_signed_rank(a, b);
  const WilcoxonResult ba = wilcoxon_signed_rank(b, a);
  EXPECT_EQ(ab.statistic, ba.statistic);
  EXPECT_EQ(ab.p_value, ba.p_value);
  EXPECT_EQ(ab.w_plus, ba.w_minus);
  EXPECT_EQ(ab.n, 5);
  EXPECT_THROW(wilcoxon_signed_rank({1.0}, {1.0, 2.0}), Error);
}

TEST(Wilcoxon, MatchesEnumerationWithTies) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> value(-4, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 14;
    std::vector<Scalar> a(n), b(n, 0.0);
    for (auto& x : a) x = value(rng);
    const WilcoxonResult r = wilcoxon_signed_rank(a, b);
    const oracle::WilcoxonOracle o = oracle::wilcoxon_enumerate(a, b);
    ASSERT_EQ(r.w_plus, o.w_plus);
    ASSERT_EQ(r.w_minus, o.w_minus);
    ASSERT_NEAR(r.p_value, o.p_value, 1e-12) << "trial " << trial;
  }
}

TEST(Wilcoxon, NormalApproximationLargeN) {
  std::vector<Scalar> a, b;
  for (int i = 0; i < 60; ++i) {
    a.push_back(i % 7 + 0.5 * (i % 3));
    b.push_back(i % 5);
  }
  const WilcoxonResult r = wilcoxon_signed_rank(a, b);
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
  // Approximation close to the exact distribution at the crossover size.
  std::vector<Scalar> ranks;
  for (int i = 1; i <= 20; ++i) ranks.push_back(i);
  EXPECT_NEAR(wilcoxon_normal_p(ranks, 60.0), wilcoxon_exact_p(ranks, 60.0), 0.01);
}

}  // namespace
}  // namespace morf

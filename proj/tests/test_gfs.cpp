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

#include "morf/gfs.hpp"

#include <gtest/gtest.h>

#include <set>

namespace morf {
namespace {

RowVector row(std::initializer_list<Scalar> v) {
  RowVector r(static_cast<Index>(v.size()));
  Index i = 0;
  for (Scalar x : v) r(i++) = x;
  return r;
}

TEST(RankFeatures, Examples) {
  EXPECT_EQ(rank_features(row({0.1, 0.9, 0.5})), (FeatureRanking{1, 2, 0}));
  EXPECT_EQ(rank_features(row({2, 2, 2, 2})), (FeatureRanking{0, 1, 2, 3}));
  EXPECT_EQ(rank_features(row({3, 1, 2, 0})), (FeatureRanking{0, 2, 1, 3}));
  EXPECT_THROW(rank_features(row({1, std::nan(""), 0})), NumericError);
}

TEST(PartitionGroups, Examples) {
  FeatureRanking r(28);
  for (Index i = 0; i < 28; ++i) r[i] = 27 - i;
  const GroupPartition p = partition_groups(r, 7);
  ASSERT_EQ(p.groups.size(), 7u);
  EXPECT_EQ(p.group_size(), 4);
  EXPECT_EQ(p.groups[0], (std::vector<Index>{27, 26, 25, 24}));
  EXPECT_EQ(partition_groups(FeatureRanking{2, 0, 1}, 3).group_size(), 1);
  EXPECT_EQ(partition_groups(FeatureRanking{0, 1, 2, 3, 4, 5, 6, 7}, 2).group_size(), 4);
  try {
    partition_groups(FeatureRanking{0, 1, 2, 3, 4}, 2);
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("5"), std::string::npos);
    EXPECT_NE(msg.find("2"), std::string::npos);
  }
}

TEST(SelectDynamic, FullCoverageAcrossSeeds) {
  const TreeTopology topo(3);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Engine rng(seed);
    RowVector act(28);
    std::normal_distribution<Scalar> normal;
    for (Index i = 0; i < 28; ++i) act(i) = normal(rng);
    const NodeAssignment a = build_dynamic_forest(act, topo, 4, rng);
    const GroupPartition groups = partition_groups(rank_features(act), 7);
    std::multiset<Index> used(a.coords.data(), a.coords.data() + a.coords.size());
    ASSERT_EQ(used.size(), 28u);
    for (Index c = 0; c < 28; ++c) ASSERT_EQ(used.count(c), 1u) << "seed " << seed;
    for (int t = 0; t < 4; ++t) {
      for (int n = 0; n < 7; ++n) {
        const auto& g = groups.groups[n];
        ASSERT_NE(std::find(g.begin(), g.end(), a.coords(t, n)), g.end());
      }
    }
  }
}

TEST(SelectDynamic, SingleTreeAndDeterminism) {
  const GroupPartition p = partition_groups(FeatureRanking{5, 4, 3, 2, 1, 0}, 3);
  Engine r1(3);
  Engine r2(3);
  const NodeAssignment a = select_dynamic(p, 1, r1);
  EXPECT_EQ(a, select_dynamic(p, 1, r2));
  for (int n = 0; n < 3; ++n) {
    const auto& g = p.groups[n];
    EXPECT_NE(std::find(g.begin(), g.end(), a.coords(0, n)), g.end());
  }
}

TEST(SelectDynamic, GroupTooSmall) {
  const GroupPartition p = partition_groups(FeatureRanking{0, 1, 2}, 3);
  Engine rng(1);
  EXPECT_THROW(select_dynamic(p, 2, rng), Error);
  EXPECT_NO_THROW(select_dynamic(p, 2, rng, true));
}

TEST(FixedAssignment, Examples) {
  const TreeTopology topo(3);
  Engine r1(9);
  Engine r2(9);
  const NodeAssignment a = fixed_random_assignment(28, topo, 4, r1);
  EXPECT_EQ(a, fixed_random_assignment(28, topo, 4, r2));
  EXPECT_EQ(a.coords.rows(), 4);
  EXPECT_EQ(a.coords.cols(), 7);
  EXPECT_NO_THROW(a.validate(28));
  const NodeAssignment one = fixed_random_assignment(1, topo, 2, r1);
  EXPECT_TRUE((one.coords.array() == 0).all());
}

}  // namespace
}  // namespace morf

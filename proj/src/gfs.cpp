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

#include <algorithm>
#include <cmath>
#include <numeric>

namespace morf {

FeatureRanking rank_features(const RowVector& activations) {
  if (activations.size() < 1) throw Error("rank_features: empty activation vector");
  for (Index i = 0; i < activations.size(); ++i) {
    if (!std::isfinite(activations(i))) {
      throw NumericError("rank_features: non-finite activation at coordinate " +
                  std::to_string(i));
    }
  }
  FeatureRanking order(static_cast<std::size_t>(activations.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return activations(a) > activations(b);
  });
  return order;
}

GroupPartition partition_groups(const FeatureRanking& ranking, int group_count) {
  const auto total = static_cast<Index>(ranking.size());
  if (group_count < 1) throw Error("partition_groups: group count must be >= 1");
  if (total % group_count != 0) {
    throw Error("partition_groups: FC dimension " + std::to_string(total) +
                " is not divisible by group count " +
                std::to_string(group_count));
  }
  const Index size = total / group_count;
  GroupPartition out;
  out.groups.resize(static_cast<std::size_t>(group_count));
  for (int k = 0; k < group_count; ++k) {
    out.groups[k].assign(ranking.begin() + k * size,
                         ranking.begin() + (k + 1) * size);
  }
  return out;
}

NodeAssignment select_dynamic(const GroupPartition& partition, int trees,
                              Engine& rng, bool with_replacement) {
  if (trees < 1) throw Error("select_dynamic: tree count must be >= 1");
  const Index size = partition.group_size();
  if (!with_replacement && size < trees) {
    throw Error("select_dynamic: group size " + std::to_string(size) +
                " is smaller than tree count " + std::to_string(trees) +
                "; cannot select without replacement");
  }
  if (size < 1) throw Error("select_dynamic: empty groups");
  const auto groups = static_cast<Index>(partition.groups.size());
  NodeAssignment out;
  out.coords.resize(trees, groups);
  for (Index k = 0; k < groups; ++k) {
    std::vector<Index> pool = partition.groups[k];
    if (with_replacement) {
      std::uniform_int_distribution<Index> pick(0, size - 1);
      for (int t = 0; t < trees; ++t) {
        out.coords(t, k) = static_cast<int>(pool[pick(rng)]);
      }
    } else {
      // Partial Fisher-Yates: the first `trees` slots form a uniform injection.
      for (int t = 0; t < trees; ++t) {
        std::uniform_int_distribution<Index> pick(t, size - 1);
        std::swap(pool[t], pool[pick(rng)]);
        out.coords(t, k) = static_cast<int>(pool[t]);
      }
    }
  }
  return out;
}

NodeAssignment fixed_random_assignment(int fc_dim, const TreeTopology& topology,
                                       int trees, Engine& rng) {
  if (fc_dim < 1) throw Error("fixed_random_assignment: FC dimension must be >= 1");
  if (trees < 1) throw Error("fixed_random_assignment: tree count must be >= 1");
  std::uniform_int_distribution<int> pick(0, fc_dim - 1);
  NodeAssignment out;
  out.coords.resize(trees, topology.split_count());
  for (int t = 0; t < trees; ++t) {
    for (int n = 0; n < topology.split_count(); ++n) out.coords(t, n) = pick(rng);
  }
  return out;
}

NodeAssignment build_dynamic_forest(const RowVector& activations,
                                    const TreeTopology& topology, int trees,
                                    Engine& rng, bool with_replacement) {
  return select_dynamic(
      partition_groups(rank_features(activations), topology.split_count()),
      trees, rng, with_replacement);
}

}  // namespace morf

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
// Grouped feature selection (GFS).
//
// FC activations are ranked in descending order and cut into as many
// contiguous groups as a tree has split nodes. Group k feeds split node k
// (breadth-first) of every tree; within a group each tree draws its own
// coordinate without replacement, so with group size equal to the tree count
// every FC coordinate is used exactly once by the dynamic forest.

#ifndef MORF_GFS_HPP_
#define MORF_GFS_HPP_

#include <vector>

#include "morf/forest.hpp"
#include "morf/rng.hpp"
#include "morf/types.hpp"

namespace morf {

// Coordinates ordered by descending activation; ties keep index order.
using FeatureRanking = std::vector<Index>;

struct GroupPartition {
  // groups[k] lists coordinates at ranking positions [k*size, (k+1)*size).
  std::vector<std::vector<Index>> groups;

  Index group_size() const {
    return groups.empty() ? 0 : static_cast<Index>(groups.front().size());
  }
};

FeatureRanking rank_features(const RowVector& activations);

GroupPartition partition_groups(const FeatureRanking& ranking, int group_count);

// One injection per group from trees into the group's coordinates. With
// `with_replacement` each tree draws independently (compatibility with the
// earlier conference-style selection).
NodeAssignment select_dynamic(const GroupPartition& partition, int trees,
                              Engine& rng, bool with_replacement = false);

// Uniform draw with replacement for every split node of every tree.
NodeAssignment fixed_random_assignment(int fc_dim, const TreeTopology& topology,
                                       int trees, Engine& rng);

// rank + partition + select for a single activation vector.
NodeAssignment build_dynamic_forest(const RowVector& activations,
                                    const TreeTopology& topology, int trees,
                                    Engine& rng, bool with_replacement = false);

}  // namespace morf

#endif  // MORF_GFS_HPP_

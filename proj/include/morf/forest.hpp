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
// Differentiable ordinal regression forest.
//
// A tree of depth D has 2^D - 1 split nodes indexed breadth-first (children of
// n are 2n+1 and 2n+2) and 2^D leaves ordered left to right. Split node n
// routes a sample left with probability s_n = sigmoid(fc[eta(n)]), where
// eta maps split nodes to coordinates of the backbone's FC output. Each leaf
// holds an ordinal distribution over the C-1 "rank exceeds c" events; a tree
// outputs the routing-weighted mixture of its leaves and the forest averages
// its trees.
//
// Plain Eigen functions serve inference; the ad:: overloads record the same
// computation on a tape for training.

#ifndef MORF_FOREST_HPP_
#define MORF_FOREST_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "morf/autodiff.hpp"
#include "morf/types.hpp"

namespace morf {

// Probability clipping applied before the logarithms of tree_loss.
inline constexpr Scalar kLossClip = 1e-12;
// A coordinate counts towards the decoded rank when strictly above this.
inline constexpr Scalar kDecodeThreshold = 0.5;

class TreeTopology {
 public:
  explicit TreeTopology(int depth);

  int depth() const { return depth_; }
  int split_count() const { return (1 << depth_) - 1; }
  int leaf_count() const { return 1 << depth_; }
  static int left_child(int node) { return 2 * node + 1; }
  static int right_child(int node) { return 2 * node + 2; }
  // Split node on leaf's path at `level` (0 = root).
  int ancestor(int leaf, int level) const {
    return (1 << level) - 1 + (leaf >> (depth_ - level));
  }
  // True when the path to `leaf` turns left at `level`.
  bool turns_left(int leaf, int level) const {
    return ((leaf >> (depth_ - 1 - level)) & 1) == 0;
  }

 private:
  int depth_;
};

struct ForestConfig {
  int trees = 4;
  int depth = 3;
  int classes = 3;
  // FC output dimension; 0 selects trees * split_count.
  int fc_dim = 0;

  TreeTopology topology() const { return TreeTopology(depth); }
  int split_count() const { return (1 << depth) - 1; }
  int leaf_count() const { return 1 << depth; }
  int resolved_fc_dim() const {
    return fc_dim > 0 ? fc_dim : trees * split_count();
  }
  void validate() const;
};

// eta_t for every tree: coords(t, n) is the FC coordinate of split node n.
struct NodeAssignment {
  IndexMatrix coords;

  int trees() const { return static_cast<int>(coords.rows()); }
  int split_count() const { return static_cast<int>(coords.cols()); }
  std::vector<Index> tree(int t) const;
  void validate(int fc_dim) const;
  bool operator==(const NodeAssignment& other) const {
    return coords == other.coords;
  }
};

// Binary ordinal target: prefix of y-1 ones followed by zeros.
RowVector encode_label(int label, int classes);

// 1 + number of coordinates strictly greater than 0.5.
template <typename Derived>
int decode_distribution(const Eigen::MatrixBase<Derived>& d) {
  return 1 + static_cast<int>((d.array() > kDecodeThreshold).count());
}

// Per-leaf path products of split probabilities s (length split_count).
template <typename Derived>
RowVectorT<typename Derived::Scalar> route_probabilities(
    const Eigen::MatrixBase<Derived>& s, const TreeTopology& topology) {
  using T = typename Derived::Scalar;
  if (s.size() != topology.split_count()) {
    throw ShapeError("route_probabilities: expected " +
                     std::to_string(topology.split_count()) +
                     " split probabilities, got " + std::to_string(s.size()));
  }
  const int splits = topology.split_count();
  RowVectorT<T> mu(splits + topology.leaf_count());
  mu(0) = T(1);
  for (int n = 0; n < splits; ++n) {
    mu(TreeTopology::left_child(n)) = mu(n) * s(n);
    mu(TreeTopology::right_child(n)) = mu(n) * (T(1) - s(n));
  }
  return mu.tail(topology.leaf_count());
}

// Cumulative sigmoid product along each row: pi^c = prod_{k<=c} sigmoid(a^k).
// Rows are monotone non-increasing by construction.
template <typename Derived>
MatrixT<typename Derived::Scalar> leaf_distribution(
    const Eigen::MatrixBase<Derived>& raw) {
  using T = typename Derived::Scalar;
  MatrixT<T> out(raw.rows(), raw.cols());
  for (Index r = 0; r < raw.rows(); ++r) {
    T running(1);
    for (Index c = 0; c < raw.cols(); ++c) {
      running *= T(1) / (T(1) + std::exp(-raw(r, c)));
      out(r, c) = running;
    }
  }
  return out;
}

// Routing-weighted mixture of leaf distributions for one sample.
RowVector tree_output(const RowVector& fc, const std::vector<Index>& coords,
                      const Matrix& leaf_dist, const TreeTopology& topology);

// Unweighted mean of tree outputs.
RowVector forest_output(const std::vector<RowVector>& tree_outputs);

// Summed per-component binary cross-entropy with clipped probabilities.
Scalar tree_loss(const RowVector& g, const RowVector& target);

// Mean squared deviation of per-tree ranks from the forest rank.
Scalar tree_variance(const std::vector<int>& tree_ranks, int forest_rank);

// Mean squared Euclidean distance of tree distributions to their mean.
Scalar tree_distribution_variance(const std::vector<RowVector>& tree_outputs);

// Constant matrices that express routing as tape operations: for each level,
// `select` (splits x leaves) picks each leaf's ancestor, `left` (1 x leaves)
// marks left turns.
struct RoutingConstants {
  explicit RoutingConstants(const TreeTopology& topology);

  TreeTopology topology;
  std::vector<Matrix> select;
  std::vector<Matrix> left;
};

namespace ad_ops {

ad::Var route_probabilities(ad::Var s, const RoutingConstants& routing);
ad::Var leaf_distribution(ad::Var raw);
// fc is 1 x F; returns 1 x (C-1).
ad::Var tree_output(ad::Var fc, const std::vector<Index>& coords,
                    ad::Var leaf_dist, const RoutingConstants& routing);
ad::Var tree_loss(ad::Var g, const RowVector& target);

}  // namespace ad_ops
}  // namespace morf

#endif  // MORF_FOREST_HPP_

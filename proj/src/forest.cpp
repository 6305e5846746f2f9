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

#include "morf/forest.hpp"

#include <algorithm>

namespace morf {

TreeTopology::TreeTopology(int depth) : depth_(depth) {
  if (depth < 1 || depth > 20) {
    throw Error("TreeTopology: depth must be in [1, 20], got " +
                std::to_string(depth));
  }
}

void ForestConfig::validate() const {
  if (trees < 1) throw Error("forest: tree count must be >= 1");
  if (depth < 1 || depth > 12) throw Error("forest: depth must be in [1, 12]");
  if (classes < 2) throw Error("forest: class count must be >= 2");
  if (fc_dim < 0) throw Error("forest: FC dimension must be >= 0");
}

std::vector<Index> NodeAssignment::tree(int t) const {
  std::vector<Index> out(static_cast<std::size_t>(coords.cols()));
  for (Index n = 0; n < coords.cols(); ++n) out[n] = coords(t, n);
  return out;
}

void NodeAssignment::validate(int fc_dim) const {
  for (Index t = 0; t < coords.rows(); ++t) {
    for (Index n = 0; n < coords.cols(); ++n) {
      if (coords(t, n) < 0 || coords(t, n) >= fc_dim) {
        throw Error("node assignment: tree " + std::to_string(t) + " node " +
                    std::to_string(n) + " maps to coordinate " +
                    std::to_string(coords(t, n)) + " outside [0, " +
                    std::to_string(fc_dim) + ")");
      }
    }
  }
}

RowVector encode_label(int label, int classes) {
  if (classes < 2) throw Error("encode_label: class count must be >= 2");
  if (label < 1 || label > classes) {
    throw Error("encode_label: label " + std::to_string(label) +
                " outside 1.." + std::to_string(classes));
  }
  RowVector d = RowVector::Zero(classes - 1);
  d.head(label - 1).setOnes();
  return d;
}

RowVector tree_output(const RowVector& fc, const std::vector<Index>& coords,
                      const Matrix& leaf_dist, const TreeTopology& topology) {
  RowVector s(static_cast<Index>(coords.size()));
  for (std::size_t n = 0; n < coords.size(); ++n) {
    s(static_cast<Index>(n)) = 1.0 / (1.0 + std::exp(-fc(coords[n])));
  }
  return route_probabilities(s, topology) * leaf_dist;
}

RowVector forest_output(const std::vector<RowVector>& tree_outputs) {
  if (tree_outputs.empty()) throw Error("forest_output: no trees");
  RowVector acc = RowVector::Zero(tree_outputs.front().size());
  for (const auto& g : tree_outputs) acc += g;
  return acc / static_cast<Scalar>(tree_outputs.size());
}

Scalar tree_loss(const RowVector& g, const RowVector& target) {
  if (g.size() != target.size()) {
    throw ShapeError("tree_loss: prediction has " + std::to_string(g.size()) +
                     " components, target has " + std::to_string(target.size()));
  }
  Scalar loss = 0.0;
  for (Index c = 0; c < g.size(); ++c) {
    const Scalar p = std::clamp(g(c), kLossClip, 1.0 - kLossClip);
    loss -= target(c) * std::log(p) + (1.0 - target(c)) * std::log(1.0 - p);
  }
  return loss;
}

Scalar tree_variance(const std::vector<int>& tree_ranks, int forest_rank) {
  if (tree_ranks.empty()) throw Error("tree_variance: no trees");
  Scalar acc = 0.0;
  for (int r : tree_ranks) {
    const Scalar diff = static_cast<Scalar>(r - forest_rank);
    acc += diff * diff;
  }
  return acc / static_cast<Scalar>(tree_ranks.size());
}

Scalar tree_distribution_variance(const std::vector<RowVector>& tree_outputs) {
  const RowVector centre = forest_output(tree_outputs);
  Scalar acc = 0.0;
  for (const auto& g : tree_outputs) acc += (g - centre).squaredNorm();
  return acc / static_cast<Scalar>(tree_outputs.size());
}

RoutingConstants::RoutingConstants(const TreeTopology& topo) : topology(topo) {
  const int splits = topo.split_count();
  const int leaves = topo.leaf_count();
  for (int level = 0; level < topo.depth(); ++level) {
    Matrix sel = Matrix::Zero(splits, leaves);
    Matrix mask = Matrix::Zero(1, leaves);
    for (int l = 0; l < leaves; ++l) {
      sel(topo.ancestor(l, level), l) = 1.0;
      mask(0, l) = topo.turns_left(l, level) ? 1.0 : 0.0;
    }
    select.push_back(std::move(sel));
    left.push_back(std::move(mask));
  }
}

namespace ad_ops {

ad::Var route_probabilities(ad::Var s, const RoutingConstants& routing) {
  const TreeTopology& topo = routing.topology;
  if (s.cols() != topo.split_count()) {
    throw ShapeError("route_probabilities: expected " +
                     std::to_string(topo.split_count()) +
                     " split probabilities, got " + std::to_string(s.cols()));
  }
  ad::Tape& tape = *s.tape();
  const Index rows = s.rows();
  ad::Var prob;
  for (int level = 0; level < topo.depth(); ++level) {
    const Matrix mask = routing.left[level].replicate(rows, 1);
    // factor = mask * s_anc + (1 - mask) * (1 - s_anc)
    //        = (1 - mask) + (2 mask - 1) * s_anc
    ad::Var s_anc = ad::matmul(s, tape.constant(routing.select[level]));
    ad::Var signed_s =
        ad::multiply(tape.constant((2.0 * mask.array() - 1.0).matrix()), s_anc);
    ad::Var factor =
        ad::add(tape.constant((1.0 - mask.array()).matrix()), signed_s);
    prob = level == 0 ? factor : ad::multiply(prob, factor);
  }
  return prob;
}

ad::Var leaf_distribution(ad::Var raw) {
  ad::Var sig = ad::sigmoid(raw);
  std::vector<ad::Var> columns;
  columns.reserve(static_cast<std::size_t>(raw.cols()));
  ad::Var running;
  for (Index c = 0; c < raw.cols(); ++c) {
    ad::Var col = ad::slice(sig, {c}, 1);
    running = c == 0 ? col : ad::multiply(running, col);
    columns.push_back(running);
  }
  return columns.size() == 1 ? columns.front() : ad::concatenate(columns, 1);
}

ad::Var tree_output(ad::Var fc, const std::vector<Index>& coords,
                    ad::Var leaf_dist, const RoutingConstants& routing) {
  if (leaf_dist.rows() != routing.topology.leaf_count()) {
    throw ShapeError("tree_output: leaf table has " +
                     std::to_string(leaf_dist.rows()) + " rows, tree has " +
                     std::to_string(routing.topology.leaf_count()) + " leaves");
  }
  ad::Var s = ad::sigmoid(ad::slice(fc, coords, 1));
  return ad::matmul(route_probabilities(s, routing), leaf_dist);
}

ad::Var tree_loss(ad::Var g, const RowVector& target) {
  if (g.cols() != target.size() || g.rows() != 1) {
    throw ShapeError("tree_loss: prediction has " + std::to_string(g.cols()) +
                     " components, target has " + std::to_string(target.size()));
  }
  ad::Tape& tape = *g.tape();
  ad::Var p = ad::clip(g, kLossClip, 1.0 - kLossClip);
  ad::Var one = tape.constant(Matrix::Ones(1, target.size()));
  ad::Var pos = ad::multiply(tape.constant(target), ad::log(p));
  ad::Var neg = ad::multiply(tape.constant((1.0 - target.array()).matrix()),
                             ad::log(ad::subtract(one, p)));
  return ad::scale(ad::sum(ad::add(pos, neg)), -1.0);
}

}  // namespace ad_ops
}  // namespace morf

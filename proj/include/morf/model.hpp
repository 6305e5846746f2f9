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
// Trainable model theta: a feed-forward backbone ending in a linear FC layer,
// plus (for forest heads) one raw leaf table per tree. Also the optimizers
// used to update theta and phi.

#ifndef MORF_MODEL_HPP_
#define MORF_MODEL_HPP_

#include <vector>

#include "morf/autodiff.hpp"
#include "morf/forest.hpp"
#include "morf/rng.hpp"
#include "morf/types.hpp"

namespace morf {

class Backbone {
 public:
  Backbone() = default;
  // Weights and biases uniform in +-1/sqrt(fan_in).
  Backbone(Index input_dim, const std::vector<int>& hidden, Index output_dim,
           Engine& rng);

  Index input_dim() const { return weights_.empty() ? 0 : weights_.front().value.rows(); }
  Index output_dim() const { return weights_.empty() ? 0 : weights_.back().value.cols(); }
  std::size_t layers() const { return weights_.size(); }

  // Rows of x are samples; ReLU between layers, none after the last.
  Matrix forward(const Matrix& x) const;
  ad::Var forward(ad::Tape& tape, ad::Var x);

  std::vector<ad::Parameter*> params();

 private:
  std::vector<ad::Parameter> weights_;  // in x out
  std::vector<ad::Parameter> biases_;   // 1 x out
};

enum class Head { kForest, kSoftmax };

struct ForestPrediction {
  std::vector<RowVector> trees;
  RowVector forest;
};

class Model {
 public:
  Model() = default;
  Model(Head head, Index input_dim, const std::vector<int>& hidden,
        const ForestConfig& forest, Engine& rng);

  Head head() const { return head_; }
  const ForestConfig& forest() const { return forest_; }
  Backbone& backbone() { return backbone_; }
  const Backbone& backbone() const { return backbone_; }
  std::vector<ad::Parameter>& leaves() { return leaves_; }
  const std::vector<ad::Parameter>& leaves() const { return leaves_; }

  // Groups "backbone" and, for forest heads, "leaves".
  ad::ParamSet params();
  Vector flat() { return ad::flatten(params()); }
  void set_flat(const Vector& theta) { ad::assign(params(), theta); }

  // Transformed leaf distributions, one (leaves x C-1) matrix per tree.
  std::vector<Matrix> leaf_distributions() const;
  ForestPrediction predict(const RowVector& fc, const NodeAssignment& forest,
                           const std::vector<Matrix>& leaf_dists) const;

 private:
  Head head_ = Head::kForest;
  ForestConfig forest_;
  Backbone backbone_;
  std::vector<ad::Parameter> leaves_;  // per tree: leaves x (C-1) raw values
};

// Per-sample forest graph: FC output, tree outputs and per-tree losses.
struct SampleGraph {
  ad::Var fc;
  std::vector<ad::Var> outputs;
  std::vector<ad::Var> losses;
};

SampleGraph record_forest_sample(ad::Tape& tape, Model& model,
                                 const RowVector& x, const RowVector& target,
                                 const NodeAssignment& forest,
                                 const RoutingConstants& routing);

// Softmax cross-entropy of one sample (label 1-based).
ad::Var record_softmax_loss(ad::Tape& tape, Model& model, const RowVector& x,
                            int label);

struct AdamConfig {
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-8;
  Scalar weight_decay = 0.0;  // L2 term added to the gradient
};

class Adam {
 public:
  Adam() = default;
  Adam(Index size, AdamConfig config)
      : config_(config), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

  void step(Vector& theta, const Vector& grad, Scalar lr);

  const AdamConfig& config() const { return config_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }
  long steps() const { return t_; }
  void restore(Vector m, Vector v, long t);

 private:
  AdamConfig config_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

inline void sgd_step(Vector& theta, const Vector& grad, Scalar lr) {
  theta -= lr * grad;
}

}  // namespace morf

#endif  // MORF_MODEL_HPP_

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

#include "morf/model.hpp"

#include <cmath>
#include <string>

namespace morf {
namespace {

Matrix uniform(Index rows, Index cols, Scalar bound, Engine& rng) {
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

Backbone::Backbone(Index input_dim, const std::vector<int>& hidden,
                   Index output_dim, Engine& rng) {
  if (input_dim < 1 || output_dim < 1) {
    throw Error("backbone: input and output dimensions must be >= 1");
  }
  Index fan_in = input_dim;
  std::vector<Index> widths(hidden.begin(), hidden.end());
  widths.push_back(output_dim);
  for (std::size_t k = 0; k < widths.size(); ++k) {
    if (widths[k] < 1) throw Error("backbone: layer widths must be >= 1");
    const Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(fan_in));
    const std::string prefix = "backbone." + std::to_string(k) + ".";
    weights_.push_back({prefix + "weight", uniform(fan_in, widths[k], bound, rng)});
    biases_.push_back({prefix + "bias", uniform(1, widths[k], bound, rng)});
    fan_in = widths[k];
  }
}

Matrix Backbone::forward(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("backbone: input has " + std::to_string(x.cols()) +
                     " features, expected " + std::to_string(input_dim()));
  }
  Matrix h = x;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    Matrix next = h * weights_[k].value;
    next.rowwise() += biases_[k].value.row(0);
    if (k + 1 < weights_.size()) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

ad::Var Backbone::forward(ad::Tape& tape, ad::Var x) {
  ad::Var h = x;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    ad::Var bias = tape.parameter(biases_[k]);
    if (h.rows() > 1) bias = ad::matmul(tape.constant(Matrix::Ones(h.rows(), 1)), bias);
    h = ad::add(ad::matmul(h, tape.parameter(weights_[k])), bias);
    if (k + 1 < weights_.size()) h = ad::relu(h);
  }
  return h;
}

std::vector<ad::Parameter*> Backbone::params() {
  std::vector<ad::Parameter*> out;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    out.push_back(&weights_[k]);
    out.push_back(&biases_[k]);
  }
  return out;
}

Model::Model(Head head, Index input_dim, const std::vector<int>& hidden,
             const ForestConfig& forest, Engine& rng)
    : head_(head), forest_(forest) {
  forest_.validate();
  const Index out_dim =
      head == Head::kForest ? forest_.resolved_fc_dim() : forest_.classes;
  backbone_ = Backbone(input_dim, hidden, out_dim, rng);
  if (head == Head::kForest) {
    std::uniform_real_distribution<Scalar> init(-0.5, 0.5);
    for (int t = 0; t < forest_.trees; ++t) {
      Matrix raw(forest_.leaf_count(), forest_.classes - 1);
      for (Index j = 0; j < raw.cols(); ++j) {
        for (Index i = 0; i < raw.rows(); ++i) raw(i, j) = init(rng);
      }
      leaves_.push_back({"leaves." + std::to_string(t), std::move(raw)});
    }
  }
}

ad::ParamSet Model::params() {
  ad::ParamSet set{ad::ParamGroup{"backbone", backbone_.params()}};
  if (head_ == Head::kForest) {
    ad::ParamGroup group{"leaves", {}};
    for (auto& p : leaves_) group.params.push_back(&p);
    set.push_back(std::move(group));
  }
  return set;
}

std::vector<Matrix> Model::leaf_distributions() const {
  std::vector<Matrix> out;
  out.reserve(leaves_.size());
  for (const auto& p : leaves_) out.push_back(leaf_distribution(p.value));
  return out;
}

ForestPrediction Model::predict(const RowVector& fc, const NodeAssignment& forest,
                                const std::vector<Matrix>& leaf_dists) const {
  const TreeTopology topology = forest_.topology();
  ForestPrediction out;
  out.trees.reserve(static_cast<std::size_t>(forest.trees()));
  for (int t = 0; t < forest.trees(); ++t) {
    out.trees.push_back(tree_output(fc, forest.tree(t), leaf_dists[t], topology));
  }
  out.forest = forest_output(out.trees);
  return out;
}

SampleGraph record_forest_sample(ad::Tape& tape, Model& model,
                                 const RowVector& x, const RowVector& target,
                                 const NodeAssignment& forest,
                                 const RoutingConstants& routing) {
  if (model.head() != Head::kForest) throw Error("record_forest_sample: model has no forest");
  if (forest.trees() != static_cast<int>(model.leaves().size())) {
    throw Error("record_forest_sample: assignment has " +
                std::to_string(forest.trees()) + " trees, model has " +
                std::to_string(model.leaves().size()));
  }
  SampleGraph g;
  g.fc = model.backbone().forward(tape, tape.constant(Matrix(x)));
  for (int t = 0; t < forest.trees(); ++t) {
    ad::Var dist = ad_ops::leaf_distribution(tape.parameter(model.leaves()[t]));
    ad::Var out = ad_ops::tree_output(g.fc, forest.tree(t), dist, routing);
    g.outputs.push_back(out);
    g.losses.push_back(ad_ops::tree_loss(out, target));
  }
  return g;
}

ad::Var record_softmax_loss(ad::Tape& tape, Model& model, const RowVector& x,
                            int label) {
  ad::Var logits = model.backbone().forward(tape, tape.constant(Matrix(x)));
  if (label < 1 || label > logits.cols()) {
    throw Error("softmax loss: label " + std::to_string(label) + " out of range");
  }
  // loss = log(sum(exp(z - m))) + m - z_y with m = max(z) held constant.
  ad::Var shift = tape.constant(logits.value().maxCoeff());
  ad::Var lse = ad::add(ad::log(ad::sum(ad::exp(ad::subtract(logits, shift)))), shift);
  return ad::subtract(lse, ad::slice(logits, {label - 1}, 1));
}

void Adam::step(Vector& theta, const Vector& grad, Scalar lr) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw ShapeError("adam: parameter/gradient size mismatch");
  }
  ++t_;
  Vector g = grad;
  if (config_.weight_decay != 0.0) g += config_.weight_decay * theta;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * g;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * g.cwiseProduct(g);
  const Scalar bc1 = 1.0 - std::pow(config_.beta1, static_cast<Scalar>(t_));
  const Scalar bc2 = 1.0 - std::pow(config_.beta2, static_cast<Scalar>(t_));
  theta.array() -=
      lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + config_.eps);
}

void Adam::restore(Vector m, Vector v, long t) {
  if (m.size() != v.size()) throw ShapeError("adam: moment size mismatch");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

}  // namespace morf

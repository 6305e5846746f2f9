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
// Bilevel meta-training of an ordinal regression forest.
//
// One iteration on a mini-batch, with R_t^i the loss of tree t on sample i
// and V_t the weighting net of tree t:
//
//   1. pseudo update   theta_hat = theta - alpha/(NT) sum_i,t V_t(R_t^i) dR_t^i/dtheta
//                      (base forest, plain gradient step, theta untouched)
//   2. meta step       L_meta = 1/(NT) sum_j,t R_t^j(theta_hat) on the dynamic
//                      (GFS) forest; phi <- phi - beta dL_meta/dphi, with the
//                      hypergradient assembled exactly from the stored
//                      per-sample per-tree gradients:
//                      dL/dphi_t = -alpha/(NT) sum_i <dL_meta/dtheta_hat,
//                                  dR_t^i/dtheta> dV_t(R_t^i)/dphi_t
//   3. model update    theta <- Adam(1/(NT) sum_i,t V_t(R_t^i; phi') dR_t^i/dtheta)
//                      (base forest)
//
// Weights are constants with respect to theta in steps 1 and 3.

#ifndef MORF_METATRAIN_HPP_
#define MORF_METATRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "morf/data.hpp"
#include "morf/forest.hpp"
#include "morf/metrics.hpp"
#include "morf/model.hpp"
#include "morf/rng.hpp"
#include "morf/twwnet.hpp"

namespace morf {

enum class Variant { kCe, kCorf, kCorfGfs, kCorfTww, kMorf };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
inline bool uses_forest(Variant v) { return v != Variant::kCe; }
inline bool uses_meta_step(Variant v) {
  return v == Variant::kCorfTww || v == Variant::kMorf;
}
inline bool uses_gfs(Variant v) {
  return v == Variant::kCorfGfs || v == Variant::kMorf;
}

struct Hyperparams {
  Scalar alpha = 1e-3;
  Scalar beta = 1e-4;
  int batch = 16;
  int epochs = 150;
  Scalar lr_decay = 0.1;
  int lr_decay_every = 120;
  Scalar weight_decay = 1e-4;
  int trees = 4;
  int depth = 3;
  int classes = 3;
  std::vector<int> hidden{64};
  int fc_dim = 0;  // 0 = trees * split nodes
  int tww_hidden = kDefaultTwwHidden;
  std::uint64_t seed = 1;
  bool gfs_with_replacement = false;
  // When set, TWW-Net is replaced by a frozen constant weight.
  std::optional<Scalar> constant_weight;

  ForestConfig forest() const { return {trees, depth, classes, fc_dim}; }
  Scalar learning_rate(int epoch) const;
  void validate(Variant variant) const;
};

struct Batch {
  Matrix features;          // N x dim
  std::vector<int> labels;  // 1-based
  Matrix targets;           // N x (C-1) ordinal encodings

  Index size() const { return features.rows(); }
};

Batch make_batch(const Dataset& data, const std::vector<Index>& rows);

// Per-sample per-tree losses and gradients with respect to flattened theta.
struct TreeGradients {
  Matrix losses;     // N x T
  Matrix gradients;  // (N*T) x |theta|; row i*T + t
  Matrix fc;         // N x F activations

  Index samples() const { return losses.rows(); }
  int trees() const { return static_cast<int>(losses.cols()); }
  bool empty() const { return gradients.size() == 0; }
  // (1/T) sum_t dR_t^i/dtheta for every sample (N x |theta|).
  Matrix tree_mean_gradients() const;
};

TreeGradients per_tree_gradients(Model& model, const Batch& batch,
                                 const NodeAssignment& forest);

// Tree losses without gradients (N x T).
Matrix tree_losses(const Model& model, const Batch& batch,
                   const NodeAssignment& forest);

// w_t^i = V_t(R_t^i), N x T.
Matrix tree_weights(const TreeWeighting& weighting, const Matrix& losses);

// (1/N) sum_i (1/T) sum_t w_t^i R_t^i.
Scalar weighted_train_loss(const Matrix& losses, const Matrix& weights);
Scalar weighted_train_loss(const Model& model, const Batch& batch,
                           const TreeWeighting& weighting,
                           const NodeAssignment& forest);

// (1/(NT)) sum_i,t w_t^i dR_t^i/dtheta.
Vector weighted_gradient(const TreeGradients& grads, const Matrix& weights);

struct PseudoUpdate {
  Vector theta_hat;
  Scalar alpha = 0.0;
  TreeGradients train;  // stored for the hypergradient and model update
  Matrix weights;       // N x T, under the current phi
};

PseudoUpdate pseudo_update(Model& model, const TreeWeighting& weighting,
                           const Batch& batch, const NodeAssignment& base_forest,
                           Scalar alpha);

// Mean of FC activations over the batch, evaluated at `model`.
RowVector mean_activations(const Model& model, const Batch& batch);

// 1/(NT) sum_j,t R_t^j for `model` (theta_hat) on `forest`.
Scalar meta_loss(const Model& model, const Batch& batch,
                 const NodeAssignment& forest);

struct MetaGradient {
  Vector phi_grad;            // empty for frozen weighting
  Scalar meta_loss = 0.0;
  Vector meta_theta_grad;     // dL_meta/dtheta_hat
  Matrix meta_sample_grads;   // M x |theta|: (1/T) sum_t dR_t^j/dtheta_hat
  Matrix similarity;          // N x M matrix G
  Matrix inner_products;      // N x T: <dL_meta/dtheta_hat, dR_t^i/dtheta>
};

// `theta_hat_model` must hold theta_hat (same architecture as the trained
// model). Throws when the pseudo update carries no stored gradients.
MetaGradient meta_hypergradient(Model& theta_hat_model, TreeWeighting& weighting,
                                const PseudoUpdate& pseudo, const Batch& batch,
                                const NodeAssignment& meta_forest);

// phi <- phi - beta * grad. No-op for frozen weighting.
void meta_phi_update(TreeWeighting& weighting, const MetaGradient& meta,
                     Scalar beta);

// G_ij = <meta_grads.row(j), train_grads.row(i)>.
Matrix g_similarity(const Matrix& train_grads, const Matrix& meta_grads);

// Adam step on theta from stored per-tree gradients reweighted under the
// current weighting. Returns the gradient used.
Vector model_update(Model& model, Adam& optimizer, const TreeWeighting& weighting,
                    const TreeGradients& train, Scalar lr);

// Same, recomputing the per-tree gradients on `forest`.
Vector model_update(Model& model, Adam& optimizer, const TreeWeighting& weighting,
                    const Batch& batch, const NodeAssignment& forest, Scalar lr);

struct TrainState {
  Hyperparams hp;
  Variant variant = Variant::kMorf;
  Model model;
  TreeWeighting weighting = TreeWeighting::constant(1.0);
  Adam optimizer;
  long iteration = 0;
  NodeAssignment base_forest;
  RngStreams rng;
};

TrainState init_state(const Hyperparams& hp, Variant variant, Index input_dim);

struct StepReport {
  Scalar train_loss = 0.0;       // unweighted mean tree loss at theta
  Scalar mean_weight = 0.0;
  Scalar mean_similarity = 0.0;  // mean of G, meta variants only
  Scalar meta_loss = 0.0;
};

// One iteration of the variant's update rule.
StepReport train_step(TrainState& state, const Batch& batch, Scalar lr);

struct Evaluation {
  std::vector<int> labels;
  std::vector<int> predictions;
  std::vector<Scalar> soft_scores;     // sum_c g^c (expected rank - 1)
  std::vector<Scalar> tree_variances;  // per sample, forest heads only
  std::vector<std::vector<int>> tree_predictions;
};

Evaluation evaluate(const TrainState& state, const Dataset& data);

struct EpochRecord {
  int epoch = 0;  // 1-based
  int iterations = 0;
  Scalar lr = 0.0;
  Scalar train_loss = 0.0;
  Scalar mean_weight = 0.0;
  Scalar mean_similarity = 0.0;
  MetricsReport test;
};

using EpochCallback = std::function<void(const EpochRecord&, const TrainState&)>;

// Full training run. Batches are drawn from a seeded shuffle each epoch; the
// final partial batch is kept.
TrainState train(const Dataset& train_set, const Dataset& test_set,
                 const Hyperparams& hp, Variant variant,
                 const EpochCallback& on_epoch = {});

}  // namespace morf

#endif  // MORF_METATRAIN_HPP_

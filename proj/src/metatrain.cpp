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

#include "morf/metatrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "morf/gfs.hpp"

namespace morf {
namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kCe: return "ce";
    case Variant::kCorf: return "corf";
    case Variant::kCorfGfs: return "corf+gfs";
    case Variant::kCorfTww: return "corf+tww";
    case Variant::kMorf: return "morf";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Variant v : {Variant::kCe, Variant::kCorf, Variant::kCorfGfs,
                    Variant::kCorfTww, Variant::kMorf}) {
    if (to_string(v) == lower) return v;
  }
  throw Error("unknown variant '" + name + "' (known: ce, corf, corf+gfs, corf+tww, morf)");
}

Scalar Hyperparams::learning_rate(int epoch) const {
  return alpha * std::pow(lr_decay, static_cast<Scalar>(epoch / lr_decay_every));
}

void Hyperparams::validate(Variant variant) const {
  if (!(alpha > 0.0)) throw Error("config: alpha must be > 0");
  if (!(beta > 0.0)) throw Error("config: beta must be > 0");
  if (batch < 1) throw Error("config: batch size must be >= 1");
  if (epochs < 0) throw Error("config: epochs must be >= 0");
  if (!(lr_decay > 0.0)) throw Error("config: lr decay must be > 0");
  if (lr_decay_every < 1) throw Error("config: lr decay interval must be >= 1");
  if (weight_decay < 0.0) throw Error("config: weight decay must be >= 0");
  if (tww_hidden < 1) throw Error("config: TWW hidden width must be >= 1");
  for (int w : hidden) {
    if (w < 1) throw Error("config: backbone widths must be >= 1");
  }
  if (constant_weight && !(*constant_weight > 0.0)) {
    throw Error("config: constant weight must be > 0");
  }
  const ForestConfig fc = forest();
  fc.validate();
  if (uses_gfs(variant)) {
    const int groups = fc.split_count();
    const int dim = fc.resolved_fc_dim();
    if (dim % groups != 0) {
      throw Error("config: FC dimension " + std::to_string(dim) +
                  " is not divisible by the " + std::to_string(groups) +
                  " split nodes per tree required by GFS");
    }
    if (!gfs_with_replacement && dim / groups < trees) {
      throw Error("config: GFS group size " + std::to_string(dim / groups) +
                  " is smaller than the tree count " + std::to_string(trees));
    }
  }
}

Batch make_batch(const Dataset& data, const std::vector<Index>& rows) {
  Batch b;
  b.features.resize(static_cast<Index>(rows.size()), data.dim());
  b.targets.resize(static_cast<Index>(rows.size()), data.classes - 1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = static_cast<Index>(k);
    b.features.row(i) = data.features.row(rows[k]);
    b.labels.push_back(data.labels[rows[k]]);
    b.targets.row(i) = encode_label(data.labels[rows[k]], data.classes);
  }
  return b;
}

Matrix TreeGradients::tree_mean_gradients() const {
  const Index n = samples();
  const int t_count = trees();
  Matrix out = Matrix::Zero(n, gradients.cols());
  for (Index i = 0; i < n; ++i) {
    for (int t = 0; t < t_count; ++t) out.row(i) += gradients.row(i * t_count + t);
    out.row(i) /= static_cast<Scalar>(t_count);
  }
  return out;
}

TreeGradients per_tree_gradients(Model& model, const Batch& batch,
                                 const NodeAssignment& forest) {
  const Index n = batch.size();
  const int trees = forest.trees();
  const RoutingConstants routing(model.forest().topology());
  const ad::ParamSet params = model.params();
  const Index p = ad::parameter_count(params);

  TreeGradients out;
  out.losses.resize(n, trees);
  out.gradients.resize(n * trees, p);
  out.fc.resize(n, model.backbone().output_dim());
  for (Index i = 0; i < n; ++i) {
    ad::Tape tape;
    const SampleGraph g = record_forest_sample(
        tape, model, batch.features.row(i), batch.targets.row(i), forest, routing);
    out.fc.row(i) = g.fc.value().row(0);
    for (int t = 0; t < trees; ++t) {
      out.losses(i, t) = g.losses[t].scalar();
      out.gradients.row(i * trees + t) =
          tape.backward(g.losses[t]).flatten(params).transpose();
    }
  }
  return out;
}

Matrix tree_losses(const Model& model, const Batch& batch,
                   const NodeAssignment& forest) {
  const Matrix fc = model.backbone().forward(batch.features);
  const std::vector<Matrix> dists = model.leaf_distributions();
  Matrix losses(batch.size(), forest.trees());
  for (Index i = 0; i < batch.size(); ++i) {
    const ForestPrediction pred = model.predict(fc.row(i), forest, dists);
    for (int t = 0; t < forest.trees(); ++t) {
      losses(i, t) = tree_loss(pred.trees[t], batch.targets.row(i));
    }
  }
  return losses;
}

Matrix tree_weights(const TreeWeighting& weighting, const Matrix& losses) {
  Matrix w(losses.rows(), losses.cols());
  for (Index i = 0; i < losses.rows(); ++i) {
    for (Index t = 0; t < losses.cols(); ++t) {
      w(i, t) = weighting.weight(static_cast<int>(t), losses(i, t));
    }
  }
  return w;
}

Scalar weighted_train_loss(const Matrix& losses, const Matrix& weights) {
  if (losses.size() == 0) throw Error("weighted_train_loss: empty batch");
  if (losses.rows() != weights.rows() || losses.cols() != weights.cols()) {
    throw ShapeError("weighted_train_loss: losses and weights differ in shape");
  }
  return losses.cwiseProduct(weights).sum() /
         static_cast<Scalar>(losses.rows() * losses.cols());
}

Scalar weighted_train_loss(const Model& model, const Batch& batch,
                           const TreeWeighting& weighting,
                           const NodeAssignment& forest) {
  if (batch.size() == 0) throw Error("weighted_train_loss: empty batch");
  const Matrix losses = tree_losses(model, batch, forest);
  return weighted_train_loss(losses, tree_weights(weighting, losses));
}

Vector weighted_gradient(const TreeGradients& grads, const Matrix& weights) {
  const Index n = grads.samples();
  const int trees = grads.trees();
  Vector out = Vector::Zero(grads.gradients.cols());
  for (Index i = 0; i < n; ++i) {
    for (int t = 0; t < trees; ++t) {
      out += weights(i, t) * grads.gradients.row(i * trees + t).transpose();
    }
  }
  return out / static_cast<Scalar>(n * trees);
}

PseudoUpdate pseudo_update(Model& model, const TreeWeighting& weighting,
                           const Batch& batch, const NodeAssignment& base_forest,
                           Scalar alpha) {
  if (batch.size() == 0) throw Error("pseudo_update: empty batch");
  PseudoUpdate out;
  out.alpha = alpha;
  out.train = per_tree_gradients(model, batch, base_forest);
  require_finite(out.train.gradients, "gradient in pseudo update");
  out.weights = tree_weights(weighting, out.train.losses);
  out.theta_hat = model.flat() - alpha * weighted_gradient(out.train, out.weights);
  return out;
}

RowVector mean_activations(const Model& model, const Batch& batch) {
  return model.backbone().forward(batch.features).colwise().mean();
}

Scalar meta_loss(const Model& model, const Batch& batch,
                 const NodeAssignment& forest) {
  const Matrix losses = tree_losses(model, batch, forest);
  return losses.sum() / static_cast<Scalar>(losses.size());
}

Matrix g_similarity(const Matrix& train_grads, const Matrix& meta_grads) {
  if (train_grads.cols() != meta_grads.cols()) {
    throw ShapeError("g_similarity: gradient lengths differ");
  }
  return train_grads * meta_grads.transpose();
}

MetaGradient meta_hypergradient(Model& theta_hat_model, TreeWeighting& weighting,
                                const PseudoUpdate& pseudo, const Batch& batch,
                                const NodeAssignment& meta_forest) {
  if (pseudo.train.empty()) {
    throw Error("meta_hypergradient: no stored training gradients; run "
                "pseudo_update first");
  }
  const Index n = batch.size();
  const int trees = meta_forest.trees();
  if (pseudo.train.samples() != n || pseudo.train.trees() != trees) {
    throw Error("meta_hypergradient: stored gradients do not match the batch");
  }
  const RoutingConstants routing(theta_hat_model.forest().topology());
  const ad::ParamSet params = theta_hat_model.params();

  MetaGradient out;
  out.meta_sample_grads.resize(n, ad::parameter_count(params));
  Scalar total = 0.0;
  for (Index j = 0; j < n; ++j) {
    ad::Tape tape;
    const SampleGraph g = record_forest_sample(tape, theta_hat_model,
                                               batch.features.row(j),
                                               batch.targets.row(j), meta_forest,
                                               routing);
    ad::Var tree_sum = g.losses.front();
    for (int t = 1; t < trees; ++t) tree_sum = ad::add(tree_sum, g.losses[t]);
    ad::Var tree_mean = ad::scale(tree_sum, 1.0 / trees);
    total += tree_mean.scalar();
    out.meta_sample_grads.row(j) =
        tape.backward(tree_mean).flatten(params).transpose();
  }
  require_finite(out.meta_sample_grads, "gradient in meta step");
  out.meta_loss = total / static_cast<Scalar>(n);
  out.meta_theta_grad =
      out.meta_sample_grads.colwise().sum().transpose() / static_cast<Scalar>(n);
  out.similarity =
      g_similarity(pseudo.train.tree_mean_gradients(), out.meta_sample_grads);

  out.inner_products = pseudo.train.gradients * out.meta_theta_grad;
  out.inner_products.resize(trees, n);  // column-major: entry (t, i)
  out.inner_products.transposeInPlace();
  if (weighting.frozen()) return out;

  // dL_meta/dphi = sum_i,t c_t^i dV_t(R_t^i)/dphi with
  // c_t^i = -alpha/(NT) <dL_meta/dtheta_hat, dR_t^i/dtheta>.
  const Scalar factor = -pseudo.alpha / static_cast<Scalar>(n * trees);
  ad::Tape tape;
  std::vector<ad::Var> terms;
  for (Index i = 0; i < n; ++i) {
    for (int t = 0; t < trees; ++t) {
      ad::Var w = weighting.weight(tape, t, tape.constant(pseudo.train.losses(i, t)));
      terms.push_back(ad::scale(w, factor * out.inner_products(i, t)));
    }
  }
  ad::Var surrogate = ad::sum(ad::concatenate(terms, 1));
  out.phi_grad = tape.backward(surrogate).flatten(weighting.params());
  require_finite(out.phi_grad, "hypergradient");
  return out;
}

void meta_phi_update(TreeWeighting& weighting, const MetaGradient& meta,
                     Scalar beta) {
  if (weighting.frozen()) return;
  const ad::ParamSet params = weighting.params();
  Vector phi = ad::flatten(params);
  if (meta.phi_grad.size() != phi.size()) {
    throw Error("meta_phi_update: hypergradient does not match phi");
  }
  sgd_step(phi, meta.phi_grad, beta);
  ad::assign(params, phi);
}

Vector model_update(Model& model, Adam& optimizer, const TreeWeighting& weighting,
                    const TreeGradients& train, Scalar lr) {
  if (train.empty()) throw Error("model_update: no training gradients");
  const Vector grad = weighted_gradient(train, tree_weights(weighting, train.losses));
  if (!grad.allFinite()) throw NumericError("non-finite gradient in model update");
  Vector theta = model.flat();
  optimizer.step(theta, grad, lr);
  model.set_flat(theta);
  return grad;
}

Vector model_update(Model& model, Adam& optimizer, const TreeWeighting& weighting,
                    const Batch& batch, const NodeAssignment& forest, Scalar lr) {
  return model_update(model, optimizer, weighting,
                      per_tree_gradients(model, batch, forest), lr);
}

TrainState init_state(const Hyperparams& hp, Variant variant, Index input_dim) {
  hp.validate(variant);
  TrainState s;
  s.hp = hp;
  s.variant = variant;
  s.rng = RngStreams(hp.seed);
  const ForestConfig forest = hp.forest();
  s.model = Model(uses_forest(variant) ? Head::kForest : Head::kSoftmax, input_dim,
                  hp.hidden, forest, s.rng.init);
  if (hp.constant_weight) {
    s.weighting = TreeWeighting::constant(*hp.constant_weight);
  } else if (uses_meta_step(variant)) {
    s.weighting = TreeWeighting::network(TwwNet(hp.trees, hp.tww_hidden, s.rng.init));
  } else {
    s.weighting = TreeWeighting::constant(1.0);
  }
  if (uses_forest(variant)) {
    s.base_forest = fixed_random_assignment(forest.resolved_fc_dim(),
                                            forest.topology(), hp.trees,
                                            s.rng.assignment);
  }
  AdamConfig adam;
  adam.weight_decay = hp.weight_decay;
  s.optimizer = Adam(ad::parameter_count(s.model.params()), adam);
  return s;
}

namespace {

StepReport softmax_step(TrainState& s, const Batch& batch, Scalar lr) {
  const ad::ParamSet params = s.model.params();
  Vector grad = Vector::Zero(ad::parameter_count(params));
  Scalar total = 0.0;
  for (Index i = 0; i < batch.size(); ++i) {
    ad::Tape tape;
    ad::Var loss = record_softmax_loss(tape, s.model, batch.features.row(i),
                                       batch.labels[i]);
    total += loss.scalar();
    grad += tape.backward(loss).flatten(params);
  }
  grad /= static_cast<Scalar>(batch.size());
  if (!grad.allFinite()) throw NumericError("non-finite gradient");
  Vector theta = s.model.flat();
  s.optimizer.step(theta, grad, lr);
  s.model.set_flat(theta);
  StepReport r;
  r.train_loss = total / static_cast<Scalar>(batch.size());
  r.mean_weight = 1.0;
  return r;
}

NodeAssignment dynamic_forest(TrainState& s, const Model& model, const Batch& batch) {
  return build_dynamic_forest(mean_activations(model, batch),
                              s.model.forest().topology(), s.hp.trees,
                              s.rng.dynamic, s.hp.gfs_with_replacement);
}

}  // namespace

StepReport train_step(TrainState& s, const Batch& batch, Scalar lr) {
  if (batch.size() == 0) throw Error("train_step: empty batch");
  StepReport r;
  switch (s.variant) {
    case Variant::kCe:
      r = softmax_step(s, batch, lr);
      break;
    case Variant::kCorf:
    case Variant::kCorfGfs: {
      const NodeAssignment forest = s.variant == Variant::kCorfGfs
                                        ? dynamic_forest(s, s.model, batch)
                                        : s.base_forest;
      const TreeGradients train = per_tree_gradients(s.model, batch, forest);
      r.train_loss = train.losses.mean();
      r.mean_weight = tree_weights(s.weighting, train.losses).mean();
      model_update(s.model, s.optimizer, s.weighting, train, lr);
      break;
    }
    case Variant::kCorfTww:
    case Variant::kMorf: {
      const PseudoUpdate pseudo =
          pseudo_update(s.model, s.weighting, batch, s.base_forest, lr);
      Model theta_hat = s.model;
      theta_hat.set_flat(pseudo.theta_hat);
      const NodeAssignment meta_forest = s.variant == Variant::kMorf
                                             ? dynamic_forest(s, theta_hat, batch)
                                             : s.base_forest;
      const MetaGradient meta =
          meta_hypergradient(theta_hat, s.weighting, pseudo, batch, meta_forest);
      meta_phi_update(s.weighting, meta, s.hp.beta);
      model_update(s.model, s.optimizer, s.weighting, pseudo.train, lr);
      r.train_loss = pseudo.train.losses.mean();
      r.mean_weight = pseudo.weights.mean();
      r.mean_similarity = meta.similarity.mean();
      r.meta_loss = meta.meta_loss;
      break;
    }
  }
  ++s.iteration;
  return r;
}

Evaluation evaluate(const TrainState& s, const Dataset& data) {
  Evaluation ev;
  ev.labels = data.labels;
  const Matrix out = s.model.backbone().forward(data.features);
  if (s.model.head() == Head::kSoftmax) {
    for (Index i = 0; i < data.size(); ++i) {
      const RowVector z = out.row(i);
      const RowVector p = (z.array() - z.maxCoeff()).exp().matrix();
      const RowVector prob = p / p.sum();
      Index best = 0;
      prob.maxCoeff(&best);
      ev.predictions.push_back(static_cast<int>(best) + 1);
      Scalar score = 0.0;
      for (Index k = 0; k < prob.size(); ++k) score += static_cast<Scalar>(k) * prob(k);
      ev.soft_scores.push_back(score);
    }
    return ev;
  }
  const std::vector<Matrix> dists = s.model.leaf_distributions();
  for (Index i = 0; i < data.size(); ++i) {
    const ForestPrediction pred = s.model.predict(out.row(i), s.base_forest, dists);
    const int rank = decode_distribution(pred.forest);
    std::vector<int> ranks;
    for (const auto& g : pred.trees) ranks.push_back(decode_distribution(g));
    ev.predictions.push_back(rank);
    ev.soft_scores.push_back(pred.forest.sum());
    ev.tree_variances.push_back(tree_variance(ranks, rank));
    ev.tree_predictions.push_back(std::move(ranks));
  }
  return ev;
}

TrainState train(const Dataset& train_set, const Dataset& test_set,
                 const Hyperparams& hp, Variant variant,
                 const EpochCallback& on_epoch) {
  hp.validate(variant);
  train_set.validate();
  test_set.validate();
  if (train_set.size() == 0) throw Error("train: empty training set");
  if (train_set.dim() != test_set.dim()) {
    throw Error("train: train and test feature dimensions differ");
  }
  if (train_set.classes != hp.classes || test_set.classes != hp.classes) {
    throw Error("train: dataset has " + std::to_string(train_set.classes) +
                " classes, configuration expects " + std::to_string(hp.classes));
  }

  TrainState state = init_state(hp, variant, train_set.dim());
  std::vector<Index> order(static_cast<std::size_t>(train_set.size()));
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const Scalar lr = hp.learning_rate(epoch);
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), state.rng.shuffle);

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(hp.batch)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(hp.batch));
      const Batch batch =
          make_batch(train_set, std::vector<Index>(order.begin() + start,
                                                   order.begin() + stop));
      StepReport step;
      try {
        step = train_step(state, batch, lr);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at iteration " +
                           std::to_string(state.iteration));
      }
      rec.train_loss += step.train_loss;
      rec.mean_weight += step.mean_weight;
      rec.mean_similarity += step.mean_similarity;
      ++rec.iterations;
    }
    if (rec.iterations > 0) {
      rec.train_loss /= rec.iterations;
      rec.mean_weight /= rec.iterations;
      rec.mean_similarity /= rec.iterations;
    }
    const Evaluation ev = evaluate(state, test_set);
    rec.test = make_report(ev.predictions, ev.labels, hp.classes,
                           ev.tree_variances, to_string(variant), hp.seed);
    if (on_epoch) on_epoch(rec, state);
  }
  return state;
}

}  // namespace morf

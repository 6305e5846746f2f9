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

#include "morf/verify.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "json.hpp"

#include "morf/gfs.hpp"

namespace morf::verify {
namespace {

using nlohmann::json;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int pick(Engine& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

Matrix normal_matrix(Engine& rng, Index rows, Index cols, Scalar sd) {
  std::normal_distribution<Scalar> n(0.0, sd);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

Batch random_batch(Engine& rng, Index n, Index dim, int classes) {
  Dataset d;
  d.classes = classes;
  d.features = normal_matrix(rng, n, dim, 1.0);
  for (Index i = 0; i < n; ++i) d.labels.push_back(pick(rng, 1, classes));
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[i] = i;
  return make_batch(d, rows);
}

void record_failure(SuiteReport& r, const json& detail) {
  if (r.failures++ == 0) r.failing_case = detail.dump();
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

RowVector sigmoid_row(const RowVector& x) {
  return x.unaryExpr([](Scalar v) { return 1.0 / (1.0 + std::exp(-v)); });
}

// Leaf probabilities by explicit root-to-leaf walks.
RowVector enumerate_paths(const RowVector& s, int depth) {
  RowVector p(1 << depth);
  for (int leaf = 0; leaf < (1 << depth); ++leaf) {
    Scalar prob = 1.0;
    int node = 0;
    for (int level = depth - 1; level >= 0; --level) {
      const bool right = (leaf >> level) & 1;
      prob *= right ? 1.0 - s(node) : s(node);
      node = 2 * node + (right ? 2 : 1);
    }
    p(leaf) = prob;
  }
  return p;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"gradcheck", "metagradcheck",
                                              "forest-invariants", "gfs-invariants",
                                              "reduction"};
  return names;
}

SuiteReport run_suite(const std::string& name, const SuiteOptions& options) {
  if (name == "gradcheck") return gradcheck(options);
  if (name == "metagradcheck") return metagradcheck(options);
  if (name == "forest-invariants") return forest_invariants(options);
  if (name == "gfs-invariants") return gfs_invariants(options);
  if (name == "reduction") return reduction(options);
  throw Error("unknown verify suite '" + name +
              "' (known: gradcheck, metagradcheck, forest-invariants, "
              "gfs-invariants, reduction)");
}

SuiteReport gradcheck(const SuiteOptions& options) {
  Timer timer;
  SuiteReport r;
  r.suite = "gradcheck";
  const int cases = options.cases > 0 ? options.cases : 100;
  Engine rng = make_engine(options.seed, Stream::kInit);
  for (int k = 0; k < cases; ++k) {
    const ForestConfig fc{pick(rng, 1, 3), pick(rng, 1, 4), pick(rng, 2, 5), 0};
    const Index input = pick(rng, 2, 5);
    const int hidden = pick(rng, 2, 6);
    const Index n = pick(rng, 1, 3);
    Model model(Head::kForest, input, {hidden}, fc, rng);
    for (auto& leaf : model.leaves()) leaf.value = normal_matrix(rng, leaf.value.rows(), leaf.value.cols(), 1.0);
    const NodeAssignment forest =
        fixed_random_assignment(fc.resolved_fc_dim(), fc.topology(), fc.trees, rng);
    const Batch batch = random_batch(rng, n, input, fc.classes);
    Matrix weights(n, fc.trees);
    std::uniform_real_distribution<Scalar> w(0.1, 1.0);
    for (Index i = 0; i < weights.size(); ++i) weights(i) = w(rng);

    const Vector analytic =
        weighted_gradient(per_tree_gradients(model, batch, forest), weights);
    const Vector numeric = ad::finite_difference_gradient(
        [&] { return weighted_train_loss(tree_losses(model, batch, forest), weights); },
        model.params(), 1e-5);
    const ad::GradientComparison cmp = ad::compare_gradients(analytic, numeric, 1e-5, 1e-8);
    ++r.cases;
    r.max_error = std::max(r.max_error, cmp.max_relative_error);
    if (!cmp.ok) {
      record_failure(r, {{"suite", r.suite}, {"case", k}, {"seed", options.seed},
                         {"trees", fc.trees}, {"depth", fc.depth}, {"classes", fc.classes},
                         {"input_dim", input}, {"hidden", hidden}, {"batch", n},
                         {"worst_coordinate", cmp.worst_index},
                         {"relative_error", cmp.max_relative_error},
                         {"analytic", analytic(cmp.worst_index)},
                         {"numeric", numeric(cmp.worst_index)}});
    }
  }
  r.seconds = timer.seconds();
  return r;
}

MetaInstance make_meta_instance(std::uint64_t seed) {
  Engine rng = make_engine(seed, Stream::kInit);
  MetaInstance inst;
  inst.hp.trees = 2;
  inst.hp.depth = 2;
  inst.hp.classes = 3;
  inst.hp.hidden = {4};
  inst.hp.tww_hidden = pick(rng, 4, 16);
  const ForestConfig fc = inst.hp.forest();
  inst.model = Model(Head::kForest, 3, inst.hp.hidden, fc, rng);
  for (auto& leaf : inst.model.leaves()) leaf.value = normal_matrix(rng, leaf.value.rows(), leaf.value.cols(), 1.0);
  TwwNet net(inst.hp.trees, inst.hp.tww_hidden, rng);
  for (int t = 0; t < net.trees(); ++t) {
    net.net(t).b_in.value = normal_matrix(rng, 1, inst.hp.tww_hidden, 0.5);
    net.net(t).b_out.value = normal_matrix(rng, 1, 1, 0.5);
  }
  inst.weighting = TreeWeighting::network(std::move(net));
  inst.batch = random_batch(rng, 2, 3, fc.classes);
  inst.base_forest = fixed_random_assignment(fc.resolved_fc_dim(), fc.topology(), fc.trees, rng);
  inst.alpha = std::uniform_real_distribution<Scalar>(0.05, 0.5)(rng);

  const PseudoUpdate pu =
      pseudo_update(inst.model, inst.weighting, inst.batch, inst.base_forest, inst.alpha);
  Model hat = inst.model;
  hat.set_flat(pu.theta_hat);
  inst.meta_forest = build_dynamic_forest(mean_activations(hat, inst.batch), fc.topology(),
                                          fc.trees, rng);
  return inst;
}

Scalar meta_objective(MetaInstance& inst) {
  const PseudoUpdate pu =
      pseudo_update(inst.model, inst.weighting, inst.batch, inst.base_forest, inst.alpha);
  Model hat = inst.model;
  hat.set_flat(pu.theta_hat);
  return meta_loss(hat, inst.batch, inst.meta_forest);
}

SuiteReport metagradcheck(const SuiteOptions& options) {
  Timer timer;
  SuiteReport r;
  r.suite = "metagradcheck";
  const int cases = options.cases > 0 ? options.cases : 20;
  for (int k = 0; k < cases; ++k) {
    const std::uint64_t seed = options.seed * 1000003ULL + static_cast<std::uint64_t>(k);
    MetaInstance inst = make_meta_instance(seed);
    const PseudoUpdate pu =
        pseudo_update(inst.model, inst.weighting, inst.batch, inst.base_forest, inst.alpha);
    Model hat = inst.model;
    hat.set_flat(pu.theta_hat);
    const Vector analytic =
        meta_hypergradient(hat, inst.weighting, pu, inst.batch, inst.meta_forest).phi_grad;
    const Vector numeric = ad::finite_difference_gradient(
        [&] { return meta_objective(inst); }, inst.weighting.params(), 1e-5);
    const ad::GradientComparison cmp = ad::compare_gradients(analytic, numeric, 1e-4, 1e-8);
    ++r.cases;
    r.max_error = std::max(r.max_error, cmp.max_relative_error);
    if (!cmp.ok) {
      record_failure(r, {{"suite", r.suite}, {"case", k}, {"instance_seed", seed},
                         {"phi_coordinates", analytic.size()}, {"alpha", inst.alpha},
                         {"worst_coordinate", cmp.worst_index},
                         {"relative_error", cmp.max_relative_error},
                         {"analytic", analytic(cmp.worst_index)},
                         {"numeric", numeric(cmp.worst_index)}});
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteReport forest_invariants(const SuiteOptions& options) {
  Timer timer;
  SuiteReport r;
  r.suite = "forest-invariants";
  const int cases = options.cases > 0 ? options.cases : 10000;
  Engine rng = make_engine(options.seed, Stream::kInit);
  std::normal_distribution<Scalar> normal(0.0, 3.0);
  for (int k = 0; k < cases; ++k) {
    const int depth = pick(rng, 1, 6);
    const int classes = pick(rng, 2, 6);
    const int trees = pick(rng, 1, 4);
    const TreeTopology topo(depth);
    std::vector<RowVector> outputs;
    Scalar worst_sum = 0.0;
    Scalar worst_mono = 0.0;
    json detail;
    for (int t = 0; t < trees; ++t) {
      RowVector fc(topo.split_count());
      for (Index i = 0; i < fc.size(); ++i) fc(i) = normal(rng);
      const RowVector s = sigmoid_row(fc);
      const RowVector p = route_probabilities(s, topo);
      worst_sum = std::max(worst_sum, std::abs(p.sum() - 1.0));
      worst_sum = std::max(worst_sum, (p - enumerate_paths(s, depth)).cwiseAbs().maxCoeff());
      const Matrix raw = normal_matrix(rng, topo.leaf_count(), classes - 1, 3.0);
      const Matrix pi = leaf_distribution(raw);
      for (Index l = 0; l < pi.rows(); ++l) {
        for (Index c = 1; c < pi.cols(); ++c) {
          worst_mono = std::max(worst_mono, pi(l, c) - pi(l, c - 1));
        }
      }
      std::vector<Index> coords(static_cast<std::size_t>(topo.split_count()));
      for (int n = 0; n < topo.split_count(); ++n) coords[n] = n;
      outputs.push_back(tree_output(fc, coords, pi, topo));
      if (detail.is_null()) detail = {{"fc", matrix_json(fc)}, {"raw", matrix_json(raw)}};
    }
    const RowVector g = forest_output(outputs);
    outputs.push_back(g);
    for (const auto& o : outputs) {
      for (Index c = 1; c < o.size(); ++c) worst_mono = std::max(worst_mono, o(c) - o(c - 1));
    }
    const int y = pick(rng, 1, classes);
    const bool round_trip = decode_distribution(encode_label(y, classes)) == y;
    ++r.cases;
    r.max_error = std::max({r.max_error, worst_sum, worst_mono});
    if (worst_sum > 1e-9 || worst_mono > 1e-12 || !round_trip) {
      detail["suite"] = r.suite;
      detail["case"] = k;
      detail["depth"] = depth;
      detail["classes"] = classes;
      detail["routing_error"] = worst_sum;
      detail["monotonicity_violation"] = worst_mono;
      detail["label"] = y;
      record_failure(r, detail);
    }
  }
  r.seconds = timer.seconds();
  return r;
}

SuiteReport gfs_invariants(const SuiteOptions& options) {
  Timer timer;
  SuiteReport r;
  r.suite = "gfs-invariants";
  const int cases = options.cases > 0 ? options.cases : 1000;
  const TreeTopology topo(3);
  const int trees = 4;
  const int fc_dim = 28;
  for (int k = 0; k < cases; ++k) {
    const std::uint64_t seed = options.seed + static_cast<std::uint64_t>(k);
    Engine rng = make_engine(seed, Stream::kDynamic);
    RowVector act(fc_dim);
    std::normal_distribution<Scalar> normal;
    for (Index i = 0; i < fc_dim; ++i) act(i) = normal(rng);
    const NodeAssignment a = build_dynamic_forest(act, topo, trees, rng);

    std::vector<Index> sorted(static_cast<std::size_t>(fc_dim));
    for (Index i = 0; i < fc_dim; ++i) sorted[i] = i;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](Index x, Index y) { return act(x) > act(y); });
    std::vector<int> group_of(static_cast<std::size_t>(fc_dim));
    for (int pos = 0; pos < fc_dim; ++pos) group_of[sorted[pos]] = pos / (fc_dim / 7);

    std::vector<int> uses(static_cast<std::size_t>(fc_dim), 0);
    bool ok = a.trees() == trees && a.split_count() == 7;
    for (int t = 0; ok && t < trees; ++t) {
      for (int n = 0; n < 7; ++n) {
        const Index c = a.coords(t, n);
        if (c < 0 || c >= fc_dim || group_of[c] != n) ok = false;
        else ++uses[c];
      }
    }
    for (int u : uses) ok = ok && u == 1;
    ++r.cases;
    if (!ok) {
      std::vector<Index> flat(a.coords.data(), a.coords.data() + a.coords.size());
      record_failure(r, {{"suite", r.suite}, {"case", k}, {"seed", seed},
                         {"assignment", flat}});
    }
  }
  r.seconds = timer.seconds();
  return r;
}

ReferenceCorf::ReferenceCorf(Model& initial, const NodeAssignment& forest,
                             Scalar weight_decay)
    : forest_(forest), depth_(initial.forest().depth), weight_decay_(weight_decay) {
  const ad::ParamSet set = initial.params();
  for (const auto& group : set) {
    for (const ad::Parameter* p : group.params) params_.push_back(*p);
    if (group.name == "backbone") backbone_count_ = group.params.size();
  }
  for (const auto& p : params_) {
    m_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
}

Scalar ReferenceCorf::step(const Batch& batch, Scalar lr) {
  const Index n = batch.size();
  const int trees = forest_.trees();
  ad::Tape tape;
  std::vector<ad::Var> p;
  for (auto& param : params_) p.push_back(tape.parameter(param));
  const ad::Var ones = tape.constant(Matrix::Ones(n, 1));

  ad::Var h = tape.constant(batch.features);
  for (std::size_t k = 0; k < backbone_count_; k += 2) {
    h = ad::matmul(h, p[k]) + ad::matmul(ones, p[k + 1]);
    if (k + 2 < backbone_count_) h = ad::relu(h);
  }

  const ad::Var target = tape.constant(batch.targets);
  const ad::Var complement =
      tape.constant(Matrix::Ones(n, batch.targets.cols()) - batch.targets);
  ad::Var total = tape.constant(0.0);
  for (int t = 0; t < trees; ++t) {
    const ad::Var s = ad::sigmoid(ad::slice(h, forest_.tree(t), 1));
    std::vector<ad::Var> leaves;
    for (int leaf = 0; leaf < (1 << depth_); ++leaf) {
      ad::Var prob = ones;
      int node = 0;
      for (int level = depth_ - 1; level >= 0; --level) {
        const ad::Var col = ad::slice(s, {node}, 1);
        const bool right = (leaf >> level) & 1;
        prob = ad::multiply(prob, right ? ones - col : col);
        node = 2 * node + (right ? 2 : 1);
      }
      leaves.push_back(prob);
    }
    const ad::Var routing = ad::concatenate(leaves, 1);

    const ad::Var raw = p[backbone_count_ + static_cast<std::size_t>(t)];
    std::vector<ad::Var> cols;
    ad::Var running = ad::sigmoid(ad::slice(raw, {0}, 1));
    cols.push_back(running);
    for (Index c = 1; c < raw.cols(); ++c) {
      running = ad::multiply(running, ad::sigmoid(ad::slice(raw, {c}, 1)));
      cols.push_back(running);
    }
    const ad::Var g = ad::clip(ad::matmul(routing, ad::concatenate(cols, 1)),
                               kLossClip, 1.0 - kLossClip);
    const ad::Var one_minus_g = tape.constant(Matrix::Ones(g.rows(), g.cols())) - g;
    const ad::Var ll = ad::multiply(target, ad::log(g)) +
                       ad::multiply(complement, ad::log(one_minus_g));
    total = total - ad::sum(ll);
  }
  const ad::Var loss = ad::scale(total, 1.0 / static_cast<Scalar>(n * trees));
  const ad::Gradients grads = tape.backward(loss);

  ++t_;
  const Scalar b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const Scalar c1 = 1.0 - std::pow(b1, static_cast<Scalar>(t_));
  const Scalar c2 = 1.0 - std::pow(b2, static_cast<Scalar>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const Matrix g = grads.wrt(params_[k]) + weight_decay_ * params_[k].value;
    m_[k] = b1 * m_[k] + (1.0 - b1) * g;
    v_[k] = b2 * v_[k] + (1.0 - b2) * g.cwiseProduct(g);
    params_[k].value.array() -=
        lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps);
  }
  return loss.scalar();
}

Scalar max_parameter_difference(Model& model, const ReferenceCorf& ref) {
  std::vector<const ad::Parameter*> mine;
  for (const auto& group : model.params()) {
    for (const ad::Parameter* p : group.params) mine.push_back(p);
  }
  const auto& theirs = ref.parameters();
  if (mine.size() != theirs.size()) throw ShapeError("reference layout differs from model");
  Scalar worst = 0.0;
  for (std::size_t k = 0; k < mine.size(); ++k) {
    worst = std::max(worst, (mine[k]->value - theirs[k].value).cwiseAbs().maxCoeff());
  }
  return worst;
}

SuiteReport reduction(const SuiteOptions& options) {
  Timer timer;
  SuiteReport r;
  r.suite = "reduction";
  const int iterations = options.cases > 0 ? options.cases : 10;
  SyntheticSpec spec = synthetic_preset("ord3-small");
  spec.seed = options.seed;
  const Dataset data = generate_synthetic(spec);

  Hyperparams hp;
  hp.seed = options.seed;
  hp.hidden = {16};
  hp.constant_weight = 1.0;
  TrainState state = init_state(hp, Variant::kMorf, data.dim());
  ReferenceCorf ref(state.model, state.base_forest, hp.weight_decay);

  Engine rng = make_engine(options.seed, Stream::kShuffle);
  std::uniform_int_distribution<Index> row(0, data.size() - 1);
  for (int it = 0; it < iterations; ++it) {
    std::vector<Index> rows(static_cast<std::size_t>(hp.batch));
    for (auto& x : rows) x = row(rng);
    const Batch batch = make_batch(data, rows);
    const StepReport step = train_step(state, batch, hp.alpha);
    const Scalar ref_loss = ref.step(batch, hp.alpha);
    const Scalar diff = max_parameter_difference(state.model, ref);
    ++r.cases;
    r.max_error = std::max(r.max_error, diff);
    if (diff > 1e-12) {
      record_failure(r, {{"suite", r.suite}, {"iteration", it}, {"seed", options.seed},
                         {"max_parameter_difference", diff},
                         {"loss", step.train_loss}, {"reference_loss", ref_loss},
                         {"rows", rows}});
    }
  }
  r.seconds = timer.seconds();
  return r;
}

}  // namespace morf::verify

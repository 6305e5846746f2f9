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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

namespace morf {
namespace {

Model tiny_model(Head head, std::uint64_t seed) {
  Engine rng(seed);
  return Model(head, 3, {5}, ForestConfig{2, 2, 4, 0}, rng);
}

TEST(Backbone, TapeMatchesPlainForward) {
  Model m = tiny_model(Head::kForest, 1);
  Matrix x(4, 3);
  x.setRandom();
  ad::Tape tape;
  const ad::Var out = m.backbone().forward(tape, tape.constant(x));
  EXPECT_TRUE(out.value().isApprox(m.backbone().forward(x), 1e-14));
  EXPECT_EQ(out.cols(), 6);
}

TEST(Model, ParameterGroupsAndFlatRoundTrip) {
  Model m = tiny_model(Head::kForest, 2);
  const ad::ParamSet set = m.params();
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set[0].name, "backbone");
  EXPECT_EQ(set[1].name, "leaves");
  const Index p = (3 * 5 + 5) + (5 * 6 + 6) + 2 * 4 * 3;
  EXPECT_EQ(m.flat().size(), p);
  Vector theta = m.flat();
  theta(0) += 1.0;
  m.set_flat(theta);
  EXPECT_EQ(m.flat(), theta);

  Model ce = tiny_model(Head::kSoftmax, 2);
  EXPECT_EQ(ce.params().size(), 1u);
  EXPECT_EQ(ce.backbone().output_dim(), 4);
}

TEST(Model, SampleGraphMatchesPredict) {
  Model m = tiny_model(Head::kForest, 3);
  const TreeTopology topo(2);
  const RoutingConstants routing(topo);
  NodeAssignment forest;
  forest.coords.resize(2, 3);
  forest.coords << 0, 1, 2, 5, 4, 3;
  const RowVector x = RowVector::LinSpaced(3, -0.5, 0.9);
  const RowVector target = encode_label(3, 4);
  ad::Tape tape;
  const SampleGraph g = record_forest_sample(tape, m, x, target, forest, routing);
  const RowVector fc = m.backbone().forward(Matrix(x)).row(0);
  const ForestPrediction pred = m.predict(fc, forest, m.leaf_distributions());
  for (int t = 0; t < 2; ++t) {
    EXPECT_TRUE(g.outputs[t].value().isApprox(Matrix(pred.trees[t]), 1e-13));
    EXPECT_NEAR(g.losses[t].scalar(), oracle::bce(pred.trees[t], target), 1e-12);
  }
  EXPECT_TRUE(pred.forest.isApprox(0.5 * (pred.trees[0] + pred.trees[1])));
}

TEST(Model, SoftmaxLossMatchesLogSumExp) {
  Model m = tiny_model(Head::kSoftmax, 4);
  const RowVector x = RowVector::LinSpaced(3, 0.2, 1.4);
  ad::Tape tape;
  const ad::Var loss = record_softmax_loss(tape, m, x, 2);
  const RowVector z = m.backbone().forward(Matrix(x)).row(0);
  const Scalar expected = std::log(z.array().exp().sum()) - z(1);
  EXPECT_NEAR(loss.scalar(), expected, 1e-12);

  const ad::ParamSet set = m.params();
  const Vector analytic = tape.backward(loss).flatten(set);
  const Vector numeric = ad::finite_difference_gradient(
      [&] {
        const RowVector zz = m.backbone().forward(Matrix(x)).row(0);
        return std::log(zz.array().exp().sum()) - zz(1);
      },
      set, 1e-5);
  EXPECT_TRUE(ad::compare_gradients(analytic, numeric, 1e-5, 1e-8).ok);
}

TEST(Adam, MatchesManualFirstSteps) {
  AdamConfig cfg;
  cfg.weight_decay = 0.1;
  Adam adam(2, cfg);
  Vector theta(2);
  theta << 1.0, -2.0;
  Vector grad(2);
  grad << 0.5, 0.0;
  Vector expected = theta;
  Vector m = Vector::Zero(2), v = Vector::Zero(2);
  for (int t = 1; t <= 3; ++t) {
    const Vector g = grad + 0.1 * expected;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseProduct(g);
    const Vector mh = m / (1 - std::pow(0.9, t));
    const Vector vh = v / (1 - std::pow(0.999, t));
    expected.array() -= 0.01 * mh.array() / (vh.array().sqrt() + 1e-8);
    adam.step(theta, grad, 0.01);
    EXPECT_TRUE(theta.isApprox(expected, 1e-15));
  }
  EXPECT_EQ(adam.steps(), 3);
  Vector bad(3);
  EXPECT_THROW(adam.step(bad, bad, 0.1), ShapeError);
}

TEST(Sgd, ZeroGradientKeepsTheta) {
  Vector theta = Vector::LinSpaced(4, 0, 1);
  const Vector before = theta;
  sgd_step(theta, Vector::Zero(4), 0.5);
  EXPECT_EQ(theta, before);
}

}  // namespace
}  // namespace morf

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

#include "morf/twwnet.hpp"

#include <cmath>
#include <string>

namespace morf {
namespace {

void check_loss(Scalar loss) {
  if (!std::isfinite(loss)) throw NumericError("tww weight: non-finite loss");
}

Matrix uniform(Index rows, Index cols, Scalar bound, Engine& rng) {
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

TwwNet::TwwNet(int trees, int hidden, Engine& rng) {
  if (trees < 1 || hidden < 1) throw Error("TwwNet: trees and hidden must be >= 1");
  nets_.resize(static_cast<std::size_t>(trees));
  for (int t = 0; t < trees; ++t) {
    WeightNet& n = nets_[t];
    const std::string prefix = "tww." + std::to_string(t) + ".";
    n.w_in = {prefix + "w_in", uniform(1, hidden, 1.0, rng)};
    n.b_in = {prefix + "b_in", Matrix::Zero(1, hidden)};
    n.w_out = {prefix + "w_out",
               uniform(hidden, 1, 1.0 / std::sqrt(static_cast<Scalar>(hidden)), rng)};
    n.b_out = {prefix + "b_out", Matrix::Zero(1, 1)};
  }
}

TwwNet TwwNet::zeros(int trees, int hidden) {
  Engine unused;
  TwwNet net(trees, hidden, unused);
  for (auto& n : net.nets_) {
    n.w_in.value.setZero();
    n.w_out.value.setZero();
  }
  return net;
}

Scalar TwwNet::weight(int tree, Scalar loss) const {
  check_loss(loss);
  const WeightNet& n = net(tree);
  const RowVector hidden =
      (loss * n.w_in.value + n.b_in.value).cwiseMax(0.0);
  const Scalar z = (hidden * n.w_out.value)(0, 0) + n.b_out.value(0, 0);
  return 1.0 / (1.0 + std::exp(-z));
}

ad::Var TwwNet::weight(ad::Tape& tape, int tree, ad::Var loss) {
  check_loss(loss.scalar());
  WeightNet& n = net(tree);
  ad::Var hidden = ad::relu(ad::add(ad::matmul(loss, tape.parameter(n.w_in)),
                                    tape.parameter(n.b_in)));
  ad::Var z = ad::add(ad::matmul(hidden, tape.parameter(n.w_out)),
                      tape.parameter(n.b_out));
  return ad::sigmoid(z);
}

ad::ParamSet TwwNet::params() {
  ad::ParamGroup group{"tww", {}};
  for (auto& n : nets_) {
    group.params.insert(group.params.end(), {&n.w_in, &n.b_in, &n.w_out, &n.b_out});
  }
  return {group};
}

ad::ParamSet TwwNet::params(int tree) {
  WeightNet& n = net(tree);
  return {ad::ParamGroup{"tww", {&n.w_in, &n.b_in, &n.w_out, &n.b_out}}};
}

TreeWeighting TreeWeighting::network(TwwNet net) {
  TreeWeighting w;
  w.net_ = std::move(net);
  return w;
}

TreeWeighting TreeWeighting::constant(Scalar c) {
  if (!(c > 0.0)) throw Error("freeze_constant: weight must be > 0");
  TreeWeighting w;
  w.constant_ = c;
  return w;
}

Scalar TreeWeighting::weight(int tree, Scalar loss) const {
  if (frozen()) {
    check_loss(loss);
    return *constant_;
  }
  return net_.weight(tree, loss);
}

ad::Var TreeWeighting::weight(ad::Tape& tape, int tree, ad::Var loss) {
  if (frozen()) {
    check_loss(loss.scalar());
    return tape.constant(*constant_);
  }
  return net_.weight(tape, tree, loss);
}

ad::ParamSet TreeWeighting::params() {
  if (frozen()) return {};
  return net_.params();
}

}  // namespace morf

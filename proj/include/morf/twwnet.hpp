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
// Tree-wise weighting network: one small MLP per tree mapping that tree's
// scalar loss to a weight in (0, 1):
//
//   w_t = sigmoid(relu(loss * w_in + b_in) * w_out + b_out)

#ifndef MORF_TWWNET_HPP_
#define MORF_TWWNET_HPP_

#include <optional>
#include <vector>

#include "morf/autodiff.hpp"
#include "morf/rng.hpp"
#include "morf/types.hpp"

namespace morf {

inline constexpr int kDefaultTwwHidden = 100;

struct WeightNet {
  ad::Parameter w_in;   // 1 x H
  ad::Parameter b_in;   // 1 x H
  ad::Parameter w_out;  // H x 1
  ad::Parameter b_out;  // 1 x 1
};

class TwwNet {
 public:
  TwwNet() = default;
  // Weights uniform in +-1/sqrt(fan_in), biases zero.
  TwwNet(int trees, int hidden, Engine& rng);
  // All parameters zero: every weight is exactly 0.5.
  static TwwNet zeros(int trees, int hidden);

  int trees() const { return static_cast<int>(nets_.size()); }
  int hidden() const {
    return nets_.empty() ? 0 : static_cast<int>(nets_.front().w_in.value.cols());
  }
  WeightNet& net(int t) { return nets_.at(t); }
  const WeightNet& net(int t) const { return nets_.at(t); }

  Scalar weight(int tree, Scalar loss) const;
  ad::Var weight(ad::Tape& tape, int tree, ad::Var loss);

  // Parameters of all trees in tree order, as group "tww".
  ad::ParamSet params();
  // Parameters of a single tree.
  ad::ParamSet params(int tree);

 private:
  std::vector<WeightNet> nets_;
};

// Either a trainable TwwNet or a frozen constant weight (no parameters, zero
// gradient). The constant form turns a meta-trained forest back into plain
// equal-weight training.
class TreeWeighting {
 public:
  static TreeWeighting network(TwwNet net);
  static TreeWeighting constant(Scalar c);

  bool frozen() const { return constant_.has_value(); }
  Scalar constant_value() const { return constant_.value_or(0.0); }
  TwwNet* net() { return frozen() ? nullptr : &net_; }
  const TwwNet* net() const { return frozen() ? nullptr : &net_; }

  Scalar weight(int tree, Scalar loss) const;
  ad::Var weight(ad::Tape& tape, int tree, ad::Var loss);
  ad::ParamSet params();

 private:
  TwwNet net_;
  std::optional<Scalar> constant_;
};

// freeze_constant(c): weighting stub returning c for every tree.
inline TreeWeighting freeze_constant(Scalar c) { return TreeWeighting::constant(c); }

}  // namespace morf

#endif  // MORF_TWWNET_HPP_

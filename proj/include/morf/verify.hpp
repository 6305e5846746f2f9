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

// Property suites behind `morf verify`, plus a batched CORF reference trainer
// written independently of the per-sample training path.

#ifndef MORF_VERIFY_HPP_
#define MORF_VERIFY_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "morf/metatrain.hpp"

namespace morf::verify {

struct SuiteReport {
  std::string suite;
  int cases = 0;
  int failures = 0;
  Scalar max_error = 0.0;
  // JSON document describing the first failing case; empty when all pass.
  std::string failing_case;
  double seconds = 0.0;

  bool ok() const { return failures == 0 && cases > 0; }
};

struct SuiteOptions {
  int cases = 0;  // 0 selects the suite default
  std::uint64_t seed = 1;
};

const std::vector<std::string>& suite_names();
SuiteReport run_suite(const std::string& name, const SuiteOptions& options = {});

// Random forest-loss instances (depth <= 4, classes <= 5): tape gradient of
// the weighted tree loss against central differences over every theta
// coordinate. Default 100 cases.
SuiteReport gradcheck(const SuiteOptions& options);
// Hypergradient against central differences of the pseudo-update followed by
// the meta loss, over every phi coordinate. Default 20 cases.
SuiteReport metagradcheck(const SuiteOptions& options);
// Routing normalization, leaf/tree monotonicity and encode/decode round trip.
// Default 10000 cases.
SuiteReport forest_invariants(const SuiteOptions& options);
// Full-coverage dynamic assignment at T=4, D=3, F=28. Default 1000 seeds.
SuiteReport gfs_invariants(const SuiteOptions& options);
// MORF with constant unit weights against the reference trainer. `cases` is
// the iteration count, default 10.
SuiteReport reduction(const SuiteOptions& options);

// Tiny bilevel instance used by metagradcheck.
struct MetaInstance {
  Hyperparams hp;
  Model model;
  TreeWeighting weighting;
  Batch batch;
  NodeAssignment base_forest;
  NodeAssignment meta_forest;
  Scalar alpha = 0.0;
};

MetaInstance make_meta_instance(std::uint64_t seed);
// L_meta(theta_hat(phi)) with the pseudo-update recomputed from scratch.
Scalar meta_objective(MetaInstance& inst);

// Whole-batch CORF trainer: one tape per step, path-product routing and its
// own Adam. Parameters mirror the layout of a forest-head Model.
class ReferenceCorf {
 public:
  ReferenceCorf(Model& initial, const NodeAssignment& forest, Scalar weight_decay);

  Scalar step(const Batch& batch, Scalar lr);
  const std::vector<ad::Parameter>& parameters() const { return params_; }

 private:
  std::vector<ad::Parameter> params_;  // backbone W0, b0, W1, b1, ..., then leaves
  std::size_t backbone_count_ = 0;
  NodeAssignment forest_;
  int depth_ = 1;
  Scalar weight_decay_ = 0.0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long t_ = 0;
};

// Largest absolute difference between the model parameters and the reference.
Scalar max_parameter_difference(Model& model, const ReferenceCorf& ref);

}  // namespace morf::verify

#endif  // MORF_VERIFY_HPP_

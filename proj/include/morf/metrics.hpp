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
// Classification metrics and the Wilcoxon signed-rank test.

#ifndef MORF_METRICS_HPP_
#define MORF_METRICS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "morf/types.hpp"

namespace morf {

// Entry (a-1, b-1) counts samples of true class a predicted as b.
IndexMatrix confusion(const std::vector<int>& predictions,
                      const std::vector<int>& labels, int classes);

Scalar accuracy(const IndexMatrix& confusion);

struct ClassScores {
  Scalar precision = 0.0;
  Scalar recall = 0.0;
  Scalar f1 = 0.0;
  bool precision_undefined = false;  // class never predicted
  bool recall_undefined = false;     // class absent from labels
};

// `cls` is 1-based.
ClassScores prf1(const IndexMatrix& confusion, int cls);

struct MetricsReport {
  std::string variant;
  std::uint64_t seed = 0;
  Index samples = 0;
  Scalar accuracy = 0.0;
  std::vector<ClassScores> per_class;
  Scalar tree_variance = 0.0;
  IndexMatrix confusion;
};

MetricsReport make_report(const std::vector<int>& predictions,
                          const std::vector<int>& labels, int classes,
                          const std::vector<Scalar>& tree_variances,
                          const std::string& variant, std::uint64_t seed);

struct WilcoxonResult {
  int n = 0;                 // non-zero differences
  Scalar w_plus = 0.0;
  Scalar w_minus = 0.0;
  Scalar statistic = 0.0;    // min(w_plus, w_minus)
  Scalar p_value = 1.0;      // two-sided
  bool exact = false;
  bool degenerate = false;   // every difference was zero
};

// Pairs with zero difference are dropped; tied magnitudes get average ranks.
// Exact null distribution for n <= 20, otherwise the normal approximation
// with continuity and tie correction.
WilcoxonResult wilcoxon_signed_rank(const std::vector<Scalar>& a,
                                    const std::vector<Scalar>& b);

inline constexpr int kWilcoxonExactLimit = 20;

// Average ranks of |d| for non-zero d (zeros must be removed by the caller).
std::vector<Scalar> signed_rank_magnitudes(const std::vector<Scalar>& diffs);

// Two-sided exact p for statistic W given the rank magnitudes.
Scalar wilcoxon_exact_p(const std::vector<Scalar>& ranks, Scalar statistic);

// Two-sided normal-approximation p with continuity and tie correction.
Scalar wilcoxon_normal_p(const std::vector<Scalar>& ranks, Scalar statistic);

}  // namespace morf

#endif  // MORF_METRICS_HPP_

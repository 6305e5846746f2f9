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

// Independent reference implementations used only by tests.

#ifndef MORF_TESTS_ORACLES_HPP_
#define MORF_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "morf/types.hpp"

namespace oracle {

using morf::Index;
using morf::Matrix;
using morf::RowVector;
using morf::Scalar;

inline Scalar sigmoid(Scalar x) { return 1.0 / (1.0 + std::exp(-x)); }

// Probability of reaching each leaf by walking every root-to-leaf path.
inline RowVector path_products(const RowVector& s, int depth) {
  const int leaves = 1 << depth;
  RowVector p(leaves);
  for (int leaf = 0; leaf < leaves; ++leaf) {
    Scalar prob = 1.0;
    int node = 0;
    for (int level = 0; level < depth; ++level) {
      const bool right = (leaf >> (depth - 1 - level)) & 1;
      prob *= right ? 1.0 - s(node) : s(node);
      node = right ? 2 * node + 2 : 2 * node + 1;
    }
    p(leaf) = prob;
  }
  return p;
}

inline Matrix cumulative_sigmoid(const Matrix& raw) {
  Matrix out(raw.rows(), raw.cols());
  for (Index r = 0; r < raw.rows(); ++r) {
    for (Index c = 0; c < raw.cols(); ++c) {
      Scalar prod = 1.0;
      for (Index k = 0; k <= c; ++k) prod *= sigmoid(raw(r, k));
      out(r, c) = prod;
    }
  }
  return out;
}

inline Scalar bce(const RowVector& g, const RowVector& d) {
  Scalar total = 0.0;
  for (Index c = 0; c < g.size(); ++c) {
    const Scalar p = std::min(std::max(g(c), 1e-12), 1.0 - 1e-12);
    total -= d(c) * std::log(p) + (1.0 - d(c)) * std::log(1.0 - p);
  }
  return total;
}

struct WilcoxonOracle {
  Scalar w_plus = 0.0;
  Scalar w_minus = 0.0;
  Scalar p_value = 1.0;
};

// Two-sided exact p by enumerating all 2^n sign assignments of the ranks of
// |d| (average ranks for ties, zeros dropped).
inline WilcoxonOracle wilcoxon_enumerate(const std::vector<Scalar>& a,
                                         const std::vector<Scalar>& b) {
  std::vector<Scalar> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  std::vector<Scalar> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    Scalar below = 0.0;
    Scalar equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) below += 1.0;
      if (std::abs(d[j]) == std::abs(d[i])) equal += 1.0;
    }
    ranks[i] = below + (equal + 1.0) / 2.0;
  }
  WilcoxonOracle out;
  for (std::size_t i = 0; i < n; ++i) (d[i] > 0 ? out.w_plus : out.w_minus) += ranks[i];
  if (n == 0) return out;
  const Scalar w = std::min(out.w_plus, out.w_minus);
  std::uint64_t hits = 0;
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    Scalar plus = 0.0;
    Scalar all = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      all += ranks[i];
      if ((mask >> i) & 1) plus += ranks[i];
    }
    if (std::min(plus, all - plus) <= w + 1e-9) ++hits;
  }
  out.p_value = std::min(1.0, static_cast<Scalar>(hits) / static_cast<Scalar>(total));
  return out;
}

}  // namespace oracle

#endif  // MORF_TESTS_ORACLES_HPP_

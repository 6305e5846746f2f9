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

#include "morf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace morf {

IndexMatrix confusion(const std::vector<int>& predictions,
                      const std::vector<int>& labels, int classes) {
  if (predictions.size() != labels.size()) {
    throw Error("confusion: " + std::to_string(predictions.size()) +
                " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (classes < 1) throw Error("confusion: class count must be >= 1");
  IndexMatrix m = IndexMatrix::Zero(classes, classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if (y < 1 || y > classes || p < 1 || p > classes) {
      throw Error("confusion: entry " + std::to_string(i) + " outside 1.." +
                  std::to_string(classes));
    }
    ++m(y - 1, p - 1);
  }
  return m;
}

Scalar accuracy(const IndexMatrix& m) {
  const auto total = m.sum();
  if (total == 0) return 0.0;
  return static_cast<Scalar>(m.trace()) / static_cast<Scalar>(total);
}

ClassScores prf1(const IndexMatrix& m, int cls) {
  if (cls < 1 || cls > m.rows()) {
    throw Error("prf1: class " + std::to_string(cls) + " outside 1.." +
                std::to_string(m.rows()));
  }
  const int k = cls - 1;
  const auto tp = static_cast<Scalar>(m(k, k));
  const auto predicted = static_cast<Scalar>(m.col(k).sum());
  const auto actual = static_cast<Scalar>(m.row(k).sum());
  ClassScores s;
  if (predicted > 0) {
    s.precision = tp / predicted;
  } else {
    s.precision_undefined = true;
  }
  if (actual > 0) {
    s.recall = tp / actual;
  } else {
    s.recall_undefined = true;
  }
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

MetricsReport make_report(const std::vector<int>& predictions,
                          const std::vector<int>& labels, int classes,
                          const std::vector<Scalar>& tree_variances,
                          const std::string& variant, std::uint64_t seed) {
  MetricsReport r;
  r.variant = variant;
  r.seed = seed;
  r.samples = static_cast<Index>(labels.size());
  r.confusion = confusion(predictions, labels, classes);
  r.accuracy = accuracy(r.confusion);
  for (int c = 1; c <= classes; ++c) r.per_class.push_back(prf1(r.confusion, c));
  if (!tree_variances.empty()) {
    r.tree_variance =
        std::accumulate(tree_variances.begin(), tree_variances.end(), 0.0) /
        static_cast<Scalar>(tree_variances.size());
  }
  return r;
}

std::vector<Scalar> signed_rank_magnitudes(const std::vector<Scalar>& diffs) {
  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(diffs[a]) < std::abs(diffs[b]);
  });
  std::vector<Scalar> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    const Scalar avg = 0.5 * static_cast<Scalar>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

Scalar wilcoxon_exact_p(const std::vector<Scalar>& ranks, Scalar statistic) {
  const std::size_t n = ranks.size();
  if (n == 0) return 1.0;
  if (n > 62) throw Error("wilcoxon_exact_p: too many pairs for exact counting");
  // Average ranks are multiples of 1/2, so doubled ranks are integers and the
  // null distribution of the doubled W+ can be counted by subset-sum DP.
  std::vector<long> doubled(n);
  long total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    doubled[k] = std::lround(2.0 * ranks[k]);
    total += doubled[k];
  }
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(total) + 1, 0);
  counts[0] = 1;
  long reach = 0;
  for (long r : doubled) {
    for (long v = reach; v >= 0; --v) {
      if (counts[v] != 0) counts[v + r] += counts[v];
    }
    reach += r;
  }
  const long w2 = std::lround(2.0 * statistic);
  std::uint64_t tail = 0;
  for (long v = 0; v <= std::min(w2, total); ++v) tail += counts[v];
  const Scalar patterns = std::ldexp(1.0, static_cast<int>(n));
  return std::min(1.0, 2.0 * static_cast<Scalar>(tail) / patterns);
}

Scalar wilcoxon_normal_p(const std::vector<Scalar>& ranks, Scalar statistic) {
  const auto n = static_cast<Scalar>(ranks.size());
  if (ranks.empty()) return 1.0;
  const Scalar mean = n * (n + 1.0) / 4.0;
  Scalar var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  // Tie correction: sum over tie groups of (t^3 - t) / 48.
  std::vector<Scalar> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const auto t = static_cast<Scalar>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  if (var <= 0.0) return 1.0;
  const Scalar z = (std::abs(statistic - mean) - 0.5) / std::sqrt(var);
  if (z <= 0.0) return 1.0;
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<Scalar>& a,
                                    const std::vector<Scalar>& b) {
  if (a.size() != b.size()) {
    throw Error("wilcoxon: paired samples differ in length (" +
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  std::vector<Scalar> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Scalar d = a[i] - b[i];
    if (!std::isfinite(d)) throw Error("wilcoxon: non-finite difference at pair " +
                                       std::to_string(i));
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult r;
  r.n = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    r.degenerate = true;
    r.p_value = 1.0;
    r.exact = true;
    return r;
  }
  const std::vector<Scalar> ranks = signed_rank_magnitudes(diffs);
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    (diffs[k] > 0.0 ? r.w_plus : r.w_minus) += ranks[k];
  }
  r.statistic = std::min(r.w_plus, r.w_minus);
  r.exact = r.n <= kWilcoxonExactLimit;
  r.p_value = r.exact ? wilcoxon_exact_p(ranks, r.statistic)
                      : wilcoxon_normal_p(ranks, r.statistic);
  return r;
}

}  // namespace morf

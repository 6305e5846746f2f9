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
// Ordinal datasets: synthetic latent-band generation, CSV ingestion, and the
// Train(n1)-Test(n2) split protocol. Labels are 1-based ranks.

#ifndef MORF_DATA_HPP_
#define MORF_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "morf/types.hpp"

namespace morf {

struct Dataset {
  Matrix features;             // samples x dim
  std::vector<int> labels;     // 1..classes
  std::vector<Scalar> latent;  // empty unless synthetic
  int classes = 0;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  Dataset subset(const std::vector<Index>& rows) const;
  void validate() const;
};

struct SyntheticSpec {
  std::string preset;  // informational
  Index samples = 2000;
  Index dim = 16;
  int classes = 3;
  std::vector<Scalar> thresholds{2.5, 3.5};
  Scalar offset = 3.0;
  Scalar noise = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
};

// Named presets; "ord3-std" is the default three-class benchmark.
SyntheticSpec synthetic_preset(const std::string& name);

// 1 + number of thresholds strictly below z.
int label_from_latent(Scalar z, const std::vector<Scalar>& thresholds);

// x ~ N(0, I); z = <u, x> + offset + N(0, noise^2) with u = (1,...,1)/sqrt(dim).
Dataset generate_synthetic(const SyntheticSpec& spec);

// Comma-separated rows, features first, integer label last. A non-numeric
// first row is treated as a header.
Dataset load_tabular(const std::string& path, int classes);
void save_tabular(const Dataset& data, const std::string& path);

struct SplitConfig {
  std::vector<int> train_classes;  // empty = all
  std::vector<int> test_classes;   // empty = all
  Scalar train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<Index> train_rows;  // indices into the source dataset
  std::vector<Index> test_rows;
};

// Stratified seeded split by class, then class filtering of each side.
Split split(const Dataset& data, const SplitConfig& config);

// "Train(n1)-Test(n2)" label for a class-filter pair.
std::string protocol_name(const std::vector<int>& train_classes,
                          const std::vector<int>& test_classes, int classes);

// Stable 64-bit fingerprint of features and labels.
std::uint64_t fingerprint(const Dataset& data);

}  // namespace morf

#endif  // MORF_DATA_HPP_

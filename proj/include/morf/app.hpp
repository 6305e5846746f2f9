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

// Experiment layer behind the `morf` command-line tool: run directories,
// checkpoints, ablation sweeps and significance reports.

#ifndef MORF_APP_HPP_
#define MORF_APP_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "morf/data.hpp"
#include "morf/metatrain.hpp"

namespace morf::app {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kCheckpointFormat = "morf-checkpoint";
inline constexpr int kCheckpointVersion = 1;

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

struct DataSource {
  std::string preset = "ord3-std";  // ignored when path is set
  std::string path;
  SyntheticSpec synthetic;  // resolved from preset and overrides
  int classes = 3;
  std::uint64_t seed = 1;  // dataset generation and split

  Dataset load() const;
  Json to_json() const;
};

// Resolves a preset with optional overrides; seed applies to generation.
DataSource preset_source(const std::string& preset, std::uint64_t seed);
DataSource file_source(const std::string& path, int classes, std::uint64_t seed);

struct RunConfig {
  DataSource data;
  SplitConfig split;
  Hyperparams hp;
  Variant variant = Variant::kMorf;

  Json to_json() const;
  std::string hash() const;
  std::string protocol() const;
};

Json hyperparams_json(const Hyperparams& hp);

struct RunResult {
  std::string dir;
  std::string config_hash;
  MetricsReport final;
  std::uint64_t test_fingerprint = 0;
  Index train_samples = 0;
  Index test_samples = 0;
  bool resumed = false;
};

// Trains one configuration into `dir`, writing config.json, dataset.json,
// metrics.jsonl, checkpoint.json, predictions.csv, summary.json, VERSION and
// curves/*.dat. With `resume`, a directory whose summary carries the same
// config hash is reused without training.
RunResult run_training(const RunConfig& config, const std::string& dir, bool resume,
                       std::ostream* log = nullptr);

// Checkpoints.
Json checkpoint_json(TrainState& state, const std::string& config_hash, int epoch);
TrainState restore_checkpoint(const Json& doc, Index input_dim);

struct Protocol {
  std::vector<int> train_classes;
  std::vector<int> test_classes;
};

struct AblationConfig {
  DataSource data;
  Hyperparams hp;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<Variant> variants{Variant::kCorf, Variant::kCorfGfs, Variant::kCorfTww,
                                Variant::kMorf};
  std::vector<Protocol> protocols{Protocol{}};
  Scalar train_fraction = 0.8;
};

struct AblationRow {
  std::string variant;
  int runs = 0;
  Scalar accuracy_mean = 0.0;
  Scalar accuracy_sd = 0.0;
  Scalar tree_variance_mean = 0.0;
  Scalar tree_variance_sd = 0.0;
  std::vector<Scalar> f1_mean;  // per class
};

struct AblationTable {
  std::string protocol;
  std::vector<AblationRow> rows;
};

std::vector<AblationTable> run_ablation(const AblationConfig& config, const std::string& out,
                                        std::ostream* log = nullptr);
Json ablation_json(const std::vector<AblationTable>& tables);
std::string ablation_markdown(const std::vector<AblationTable>& tables);

struct PairwiseTest {
  std::string a;
  std::string b;
  WilcoxonResult result;
  bool significant = false;
};

// Loads soft scores from run directories and runs every pairwise Wilcoxon
// test. Throws when the runs were evaluated on different test sets.
std::vector<PairwiseTest> compare_runs(const std::vector<std::string>& dirs,
                                       Scalar level = 0.05);
std::string compare_markdown(const std::vector<PairwiseTest>& tests);

// Entry point of the command-line tool; returns the process exit code.
int main(int argc, char** argv);

}  // namespace morf::app

#endif  // MORF_APP_HPP_

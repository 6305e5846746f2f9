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

#include "morf/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "morf/rng.hpp"

namespace morf {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, Scalar& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_int(const std::string& s, int& out) {
  Scalar v = 0.0;
  if (!parse_double(s, v) || v != std::floor(v)) return false;
  out = static_cast<int>(v);
  return true;
}

std::set<int> as_set(const std::vector<int>& classes, int all) {
  std::set<int> s(classes.begin(), classes.end());
  if (s.empty()) {
    for (int c = 1; c <= all; ++c) s.insert(c);
  }
  return s;
}

}  // namespace

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.classes = classes;
  out.features.resize(static_cast<Index>(rows.size()), dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.features.row(static_cast<Index>(k)) = features.row(rows[k]);
    out.labels.push_back(labels[rows[k]]);
    if (!latent.empty()) out.latent.push_back(latent[rows[k]]);
  }
  return out;
}

void Dataset::validate() const {
  if (static_cast<Index>(labels.size()) != features.rows()) {
    throw Error("dataset: label count does not match sample count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > classes) {
      throw Error("dataset: sample " + std::to_string(i) + " has label " +
                  std::to_string(labels[i]) + " outside 1.." +
                  std::to_string(classes));
    }
  }
}

void SyntheticSpec::validate() const {
  if (samples < 1) throw Error("synthetic: sample count must be >= 1");
  if (dim < 1) throw Error("synthetic: dimension must be >= 1");
  if (classes < 2) throw Error("synthetic: class count must be >= 2");
  if (static_cast<int>(thresholds.size()) != classes - 1) {
    throw Error("synthetic: expected " + std::to_string(classes - 1) +
                " thresholds, got " + std::to_string(thresholds.size()));
  }
  for (std::size_t k = 1; k < thresholds.size(); ++k) {
    if (!(thresholds[k] > thresholds[k - 1])) {
      throw Error("synthetic: thresholds must be strictly increasing");
    }
  }
  if (!(noise >= 0.0)) throw Error("synthetic: noise must be >= 0");
}

SyntheticSpec synthetic_preset(const std::string& name) {
  if (name == "ord3-std") {
    SyntheticSpec spec;
    spec.preset = name;
    return spec;
  }
  if (name == "ord3-small") {
    SyntheticSpec spec;
    spec.preset = name;
    spec.samples = 400;
    return spec;
  }
  if (name == "ord5") {
    SyntheticSpec spec;
    spec.preset = name;
    spec.classes = 5;
    spec.thresholds = {1.5, 2.5, 3.5, 4.5};
    return spec;
  }
  throw Error("unknown preset '" + name + "' (known: ord3-std, ord3-small, ord5)");
}

int label_from_latent(Scalar z, const std::vector<Scalar>& thresholds) {
  int y = 1;
  for (Scalar t : thresholds) {
    if (t < z) ++y;
  }
  return y;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Engine rng = make_engine(spec.seed, Stream::kData);
  std::normal_distribution<Scalar> unit(0.0, 1.0);
  const Scalar norm = 1.0 / std::sqrt(static_cast<Scalar>(spec.dim));

  Dataset data;
  data.classes = spec.classes;
  data.features.resize(spec.samples, spec.dim);
  data.labels.reserve(static_cast<std::size_t>(spec.samples));
  data.latent.reserve(static_cast<std::size_t>(spec.samples));
  for (Index i = 0; i < spec.samples; ++i) {
    Scalar projection = 0.0;
    for (Index j = 0; j < spec.dim; ++j) {
      const Scalar x = unit(rng);
      data.features(i, j) = x;
      projection += x * norm;
    }
    const Scalar eps = unit(rng) * spec.noise;
    const Scalar z = projection + spec.offset + eps;
    data.latent.push_back(z);
    data.labels.push_back(label_from_latent(z, spec.thresholds));
  }
  return data;
}

Dataset load_tabular(const std::string& path, int classes) {
  std::ifstream in(path);
  if (!in) throw Error("load_tabular: cannot open '" + path + "'");
  if (classes < 2) throw Error("load_tabular: class count must be >= 2");

  std::vector<std::vector<Scalar>> rows;
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    std::vector<Scalar> values;
    bool numeric = true;
    for (std::size_t k = 0; k + 1 < fields.size(); ++k) {
      Scalar v = 0.0;
      if (!parse_double(fields[k], v)) {
        numeric = false;
        break;
      }
      values.push_back(v);
    }
    int label = 0;
    if (numeric && !parse_int(fields.back(), label)) numeric = false;
    if (!numeric) {
      if (rows.empty() && width < 0) {
        width = static_cast<Index>(fields.size());  // header
        continue;
      }
      throw Error("load_tabular: row " + std::to_string(line_no) +
                  " has a non-numeric field");
    }
    if (fields.size() < 2) {
      throw Error("load_tabular: row " + std::to_string(line_no) +
                  " needs at least one feature and a label");
    }
    if (width >= 0 && static_cast<Index>(fields.size()) != width) {
      throw Error("load_tabular: row " + std::to_string(line_no) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(width));
    }
    width = static_cast<Index>(fields.size());
    if (label < 1 || label > classes) {
      throw Error("load_tabular: row " + std::to_string(line_no) + " has label " +
                  std::to_string(label) + " outside 1.." + std::to_string(classes));
    }
    rows.push_back(std::move(values));
    labels.push_back(label);
  }
  if (rows.empty()) throw Error("load_tabular: '" + path + "' contains no samples");

  Dataset data;
  data.classes = classes;
  data.features.resize(static_cast<Index>(rows.size()), width - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < width - 1; ++j) {
      data.features(static_cast<Index>(i), j) = rows[i][j];
    }
  }
  data.labels = std::move(labels);
  return data;
}

void save_tabular(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_tabular: cannot write '" + path + "'");
  out << std::setprecision(17);
  for (Index j = 0; j < data.dim(); ++j) out << "x" << j << ",";
  out << "label\n";
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) out << data.features(i, j) << ",";
    out << data.labels[i] << "\n";
  }
  if (!out) throw Error("save_tabular: write failed for '" + path + "'");
}

Split split(const Dataset& data, const SplitConfig& config) {
  data.validate();
  if (!(config.train_fraction > 0.0 && config.train_fraction <= 1.0)) {
    throw Error("split: train fraction must be in (0, 1]");
  }
  for (const auto* list : {&config.train_classes, &config.test_classes}) {
    for (int c : *list) {
      if (c < 1 || c > data.classes) {
        throw Error("split: class " + std::to_string(c) + " outside 1.." +
                    std::to_string(data.classes));
      }
    }
  }
  const std::set<int> train_keep = as_set(config.train_classes, data.classes);
  const std::set<int> test_keep = as_set(config.test_classes, data.classes);

  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(data.classes));
  for (Index i = 0; i < data.size(); ++i) by_class[data.labels[i] - 1].push_back(i);
  for (int c : test_keep) {
    if (by_class[c - 1].empty()) {
      throw Error("split: test class " + std::to_string(c) +
                  " has no samples in the dataset");
    }
  }

  Engine rng = make_engine(config.seed, Stream::kSplit);
  Split out;
  for (int c = 1; c <= data.classes; ++c) {
    auto& rows = by_class[c - 1];
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::floor(config.train_fraction * static_cast<Scalar>(rows.size()) + 0.5));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (k < n_train) {
        if (train_keep.count(c)) out.train_rows.push_back(rows[k]);
      } else if (test_keep.count(c)) {
        out.test_rows.push_back(rows[k]);
      }
    }
  }
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  if (out.test_rows.empty()) {
    throw Error("split: test set is empty (train fraction " +
                std::to_string(config.train_fraction) +
                " leaves no held-out samples in the test classes)");
  }
  if (out.train_rows.empty()) throw Error("split: training set is empty");
  out.train = data.subset(out.train_rows);
  out.test = data.subset(out.test_rows);
  return out;
}

std::string protocol_name(const std::vector<int>& train_classes,
                          const std::vector<int>& test_classes, int classes) {
  const auto count = [&](const std::vector<int>& v) {
    return v.empty() ? classes : static_cast<int>(std::set<int>(v.begin(), v.end()).size());
  };
  return "Train(" + std::to_string(count(train_classes)) + ")-Test(" +
         std::to_string(count(test_classes)) + ")";
}

std::uint64_t fingerprint(const Dataset& data) {
  // FNV-1a over the raw bytes of features and labels.
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  const Index rows = data.size();
  const Index cols = data.dim();
  mix(&rows, sizeof(rows));
  mix(&cols, sizeof(cols));
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      const Scalar v = data.features(i, j);
      mix(&v, sizeof(v));
    }
    const int label = data.labels[i];
    mix(&label, sizeof(label));
  }
  return h;
}

}  // namespace morf

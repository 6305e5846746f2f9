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

#include "morf/app.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "morf/metrics.hpp"
#include "morf/rng.hpp"

namespace morf::app {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

Json matrix_values(const Matrix& m) {
  return Json(std::vector<Scalar>(m.data(), m.data() + m.size()));
}

void load_values(const Json& j, ad::Parameter& p) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const auto values = j.at("values").get<std::vector<Scalar>>();
  if (rows != p.value.rows() || cols != p.value.cols() ||
      static_cast<Index>(values.size()) != rows * cols) {
    throw Error("checkpoint: parameter '" + p.name + "' has shape " + std::to_string(rows) +
                "x" + std::to_string(cols) + ", expected " +
                std::to_string(p.value.rows()) + "x" + std::to_string(p.value.cols()));
  }
  p.value = Eigen::Map<const Matrix>(values.data(), rows, cols);
}

Json param_set_json(const ad::ParamSet& set) {
  Json out = Json::array();
  for (const auto& group : set) {
    for (const ad::Parameter* p : group.params) {
      out.push_back({{"group", group.name},
                     {"name", p->name},
                     {"rows", p->value.rows()},
                     {"cols", p->value.cols()},
                     {"values", matrix_values(p->value)}});
    }
  }
  return out;
}

void restore_param_set(const Json& j, const ad::ParamSet& set) {
  std::size_t k = 0;
  for (const auto& group : set) {
    for (ad::Parameter* p : group.params) {
      if (k >= j.size()) throw Error("checkpoint: missing parameter '" + p->name + "'");
      load_values(j[k++], *p);
    }
  }
  if (k != j.size()) throw Error("checkpoint: unexpected extra parameters");
}

Json report_json(const MetricsReport& r) {
  Json per_class = Json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& s = r.per_class[c];
    per_class.push_back({{"class", c + 1},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"precision_undefined", s.precision_undefined},
                         {"recall_undefined", s.recall_undefined}});
  }
  Json confusion = Json::array();
  for (Index i = 0; i < r.confusion.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < r.confusion.cols(); ++j) row.push_back(r.confusion(i, j));
    confusion.push_back(row);
  }
  return {{"samples", r.samples},
          {"accuracy", r.accuracy},
          {"tree_variance", r.tree_variance},
          {"per_class", per_class},
          {"confusion", confusion}};
}

MetricsReport report_from_json(const Json& j, const std::string& variant, std::uint64_t seed) {
  MetricsReport r;
  r.variant = variant;
  r.seed = seed;
  r.samples = j.at("samples").get<Index>();
  r.accuracy = j.at("accuracy").get<Scalar>();
  r.tree_variance = j.at("tree_variance").get<Scalar>();
  for (const auto& c : j.at("per_class")) {
    ClassScores s;
    s.precision = c.at("precision").get<Scalar>();
    s.recall = c.at("recall").get<Scalar>();
    s.f1 = c.at("f1").get<Scalar>();
    s.precision_undefined = c.at("precision_undefined").get<bool>();
    s.recall_undefined = c.at("recall_undefined").get<bool>();
    r.per_class.push_back(s);
  }
  const auto& m = j.at("confusion");
  r.confusion = IndexMatrix::Zero(static_cast<Index>(m.size()), static_cast<Index>(m.size()));
  for (std::size_t a = 0; a < m.size(); ++a) {
    for (std::size_t b = 0; b < m[a].size(); ++b) {
      r.confusion(static_cast<Index>(a), static_cast<Index>(b)) = m[a][b].get<Index>();
    }
  }
  return r;
}

Hyperparams hyperparams_from_json(const Json& j) {
  Hyperparams hp;
  hp.alpha = j.at("alpha").get<Scalar>();
  hp.beta = j.at("beta").get<Scalar>();
  hp.batch = j.at("batch").get<int>();
  hp.epochs = j.at("epochs").get<int>();
  hp.lr_decay = j.at("lr_decay").get<Scalar>();
  hp.lr_decay_every = j.at("lr_decay_every").get<int>();
  hp.weight_decay = j.at("weight_decay").get<Scalar>();
  hp.trees = j.at("trees").get<int>();
  hp.depth = j.at("depth").get<int>();
  hp.classes = j.at("classes").get<int>();
  hp.hidden = j.at("hidden").get<std::vector<int>>();
  hp.fc_dim = j.at("fc_dim").get<int>();
  hp.tww_hidden = j.at("tww_hidden").get<int>();
  hp.seed = j.at("seed").get<std::uint64_t>();
  hp.gfs_with_replacement = j.at("gfs_with_replacement").get<bool>();
  if (!j.at("constant_weight").is_null()) hp.constant_weight = j.at("constant_weight").get<Scalar>();
  return hp;
}

std::string protocol_dir(const std::string& protocol) {
  std::string out;
  for (char c : protocol) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (c == '-') {
      out += '-';
    }
  }
  return out;
}

Scalar mean_of(const std::vector<Scalar>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<Scalar>(v.size());
}

Scalar sd_of(const std::vector<Scalar>& v) {
  if (v.size() < 2) return 0.0;
  const Scalar m = mean_of(v);
  Scalar ss = 0.0;
  for (Scalar x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<Scalar>(v.size() - 1));
}

std::string fixed(Scalar v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << value;
  return os.str();
}

DataSource preset_source(const std::string& preset, std::uint64_t seed) {
  DataSource s;
  s.preset = preset;
  s.synthetic = synthetic_preset(preset);
  s.classes = s.synthetic.classes;
  s.seed = seed;
  return s;
}

DataSource file_source(const std::string& path, int classes, std::uint64_t seed) {
  DataSource s;
  s.preset.clear();
  s.path = path;
  s.classes = classes;
  s.seed = seed;
  return s;
}

Dataset DataSource::load() const {
  if (!path.empty()) return load_tabular(path, classes);
  SyntheticSpec spec = synthetic;
  spec.seed = seed;
  return generate_synthetic(spec);
}

Json DataSource::to_json() const {
  if (!path.empty()) {
    return {{"source", "file"}, {"path", path}, {"classes", classes}, {"seed", seed}};
  }
  return {{"source", "synthetic"},
          {"preset", preset},
          {"samples", synthetic.samples},
          {"dim", synthetic.dim},
          {"classes", synthetic.classes},
          {"thresholds", synthetic.thresholds},
          {"offset", synthetic.offset},
          {"noise", synthetic.noise},
          {"seed", seed}};
}

Json hyperparams_json(const Hyperparams& hp) {
  return {{"alpha", hp.alpha},
          {"beta", hp.beta},
          {"batch", hp.batch},
          {"epochs", hp.epochs},
          {"lr_decay", hp.lr_decay},
          {"lr_decay_every", hp.lr_decay_every},
          {"weight_decay", hp.weight_decay},
          {"trees", hp.trees},
          {"depth", hp.depth},
          {"classes", hp.classes},
          {"hidden", hp.hidden},
          {"fc_dim", hp.fc_dim},
          {"resolved_fc_dim", hp.forest().resolved_fc_dim()},
          {"tww_hidden", hp.tww_hidden},
          {"seed", hp.seed},
          {"gfs_with_replacement", hp.gfs_with_replacement},
          {"constant_weight", hp.constant_weight ? Json(*hp.constant_weight) : Json(nullptr)}};
}

Json RunConfig::to_json() const {
  return {{"tool", "morf"},
          {"version", kVersion},
          {"variant", to_string(variant)},
          {"data", data.to_json()},
          {"split",
           {{"train_classes", split.train_classes},
            {"test_classes", split.test_classes},
            {"train_fraction", split.train_fraction},
            {"seed", split.seed}}},
          {"hyperparams", hyperparams_json(hp)}};
}

std::string RunConfig::hash() const { return hex64(fnv1a(to_json().dump())); }

std::string RunConfig::protocol() const {
  return protocol_name(split.train_classes, split.test_classes, hp.classes);
}

Json checkpoint_json(TrainState& state, const std::string& config_hash, int epoch) {
  Json weighting;
  if (state.weighting.frozen()) {
    weighting = {{"kind", "constant"}, {"value", state.weighting.constant_value()}};
  } else {
    weighting = {{"kind", "network"}, {"params", param_set_json(state.weighting.params())}};
  }
  std::vector<Index> coords;
  for (Index t = 0; t < state.base_forest.coords.rows(); ++t) {
    for (Index n = 0; n < state.base_forest.coords.cols(); ++n) {
      coords.push_back(state.base_forest.coords(t, n));
    }
  }
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"tool_version", kVersion},
          {"config_hash", config_hash},
          {"variant", to_string(state.variant)},
          {"epoch", epoch},
          {"iteration", state.iteration},
          {"hyperparams", hyperparams_json(state.hp)},
          {"params", param_set_json(state.model.params())},
          {"weighting", weighting},
          {"optimizer",
           {{"steps", state.optimizer.steps()},
            {"m", matrix_values(state.optimizer.first_moment())},
            {"v", matrix_values(state.optimizer.second_moment())}}},
          {"rng",
           {{"init", engine_state(state.rng.init)},
            {"assignment", engine_state(state.rng.assignment)},
            {"dynamic", engine_state(state.rng.dynamic)},
            {"shuffle", engine_state(state.rng.shuffle)}}},
          {"base_forest",
           {{"trees", state.base_forest.coords.rows()},
            {"split_nodes", state.base_forest.coords.cols()},
            {"coords", coords}}}};
}

TrainState restore_checkpoint(const Json& doc, Index input_dim) {
  if (doc.value("format", "") != kCheckpointFormat) throw Error("checkpoint: unknown format");
  if (doc.value("version", 0) != kCheckpointVersion) {
    throw Error("checkpoint: unsupported version " + doc.at("version").dump());
  }
  const Hyperparams hp = hyperparams_from_json(doc.at("hyperparams"));
  TrainState state = init_state(hp, parse_variant(doc.at("variant").get<std::string>()), input_dim);
  restore_param_set(doc.at("params"), state.model.params());
  const Json& w = doc.at("weighting");
  if (w.at("kind") == "constant") {
    state.weighting = TreeWeighting::constant(w.at("value").get<Scalar>());
  } else {
    if (state.weighting.frozen()) throw Error("checkpoint: weighting kind mismatch");
    restore_param_set(w.at("params"), state.weighting.params());
  }
  const Json& opt = doc.at("optimizer");
  const auto m = opt.at("m").get<std::vector<Scalar>>();
  const auto v = opt.at("v").get<std::vector<Scalar>>();
  state.optimizer.restore(Eigen::Map<const Vector>(m.data(), static_cast<Index>(m.size())),
                          Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())),
                          opt.at("steps").get<long>());
  const Json& rng = doc.at("rng");
  restore_engine(state.rng.init, rng.at("init").get<std::string>());
  restore_engine(state.rng.assignment, rng.at("assignment").get<std::string>());
  restore_engine(state.rng.dynamic, rng.at("dynamic").get<std::string>());
  restore_engine(state.rng.shuffle, rng.at("shuffle").get<std::string>());
  const Json& bf = doc.at("base_forest");
  const auto coords = bf.at("coords").get<std::vector<Index>>();
  const auto trees = bf.at("trees").get<Index>();
  const auto nodes = bf.at("split_nodes").get<Index>();
  if (static_cast<Index>(coords.size()) != trees * nodes) throw Error("checkpoint: malformed forest");
  state.base_forest.coords.resize(trees, nodes);
  for (Index t = 0; t < trees; ++t) {
    for (Index n = 0; n < nodes; ++n) state.base_forest.coords(t, n) = coords[t * nodes + n];
  }
  state.iteration = doc.at("iteration").get<long>();
  return state;
}

RunResult run_training(const RunConfig& config, const std::string& dir, bool resume,
                       std::ostream* log) {
  const fs::path root(dir);
  const std::string hash = config.hash();
  RunResult result;
  result.dir = dir;
  result.config_hash = hash;

  const fs::path summary_path = root / "summary.json";
  if (resume && fs::exists(summary_path)) {
    const Json summary = read_json(summary_path);
    if (summary.value("config_hash", "") == hash) {
      result.resumed = true;
      result.final = report_from_json(summary.at("test"), summary.at("variant").get<std::string>(),
                                      summary.at("seed").get<std::uint64_t>());
      result.test_fingerprint = std::stoull(summary.at("test_fingerprint").get<std::string>(), nullptr, 16);
      result.train_samples = summary.at("train_samples").get<Index>();
      result.test_samples = summary.at("test_samples").get<Index>();
      if (log) *log << "resume " << dir << " (config " << hash << ")\n";
      return result;
    }
  }

  const Dataset data = config.data.load();
  if (data.classes != config.hp.classes) {
    throw Error("dataset has " + std::to_string(data.classes) +
                " classes, configuration expects " + std::to_string(config.hp.classes));
  }
  const Split parts = split(data, config.split);
  result.train_samples = parts.train.size();
  result.test_samples = parts.test.size();
  result.test_fingerprint = fingerprint(parts.test);

  fs::create_directories(root / "curves");
  fs::remove(summary_path);
  write_text(root / "VERSION", std::string("morf ") + kVersion + "\n");
  Json cfg = config.to_json();
  cfg["config_hash"] = hash;
  write_text(root / "config.json", cfg.dump(2) + "\n");
  const Json manifest = {{"data", config.data.to_json()},
                         {"samples", data.size()},
                         {"dim", data.dim()},
                         {"classes", data.classes},
                         {"fingerprint", hex64(fingerprint(data))},
                         {"protocol", config.protocol()},
                         {"train_samples", parts.train.size()},
                         {"test_samples", parts.test.size()},
                         {"train_fingerprint", hex64(fingerprint(parts.train))},
                         {"test_fingerprint", hex64(result.test_fingerprint)}};
  write_text(root / "dataset.json", manifest.dump(2) + "\n");

  std::ofstream metrics(root / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics) throw Error("cannot write metrics file in '" + dir + "'");
  std::map<std::string, std::vector<std::pair<int, Scalar>>> curves;
  const auto on_epoch = [&](const EpochRecord& rec, const TrainState&) {
    Json line = {{"epoch", rec.epoch},
                 {"iterations", rec.iterations},
                 {"lr", rec.lr},
                 {"train_loss", rec.train_loss},
                 {"mean_weight", rec.mean_weight},
                 {"mean_g", rec.mean_similarity},
                 {"test", report_json(rec.test)}};
    metrics << line.dump() << '\n';
    metrics.flush();
    curves["train_loss"].emplace_back(rec.epoch, rec.train_loss);
    curves["test_accuracy"].emplace_back(rec.epoch, rec.test.accuracy);
    curves["tree_variance"].emplace_back(rec.epoch, rec.test.tree_variance);
    curves["mean_weight"].emplace_back(rec.epoch, rec.mean_weight);
    curves["mean_g"].emplace_back(rec.epoch, rec.mean_similarity);
    if (log) {
      *log << to_string(config.variant) << " seed " << config.hp.seed << " epoch " << rec.epoch
           << " loss " << fixed(rec.train_loss) << " acc " << fixed(rec.test.accuracy)
           << " var " << fixed(rec.test.tree_variance) << '\n';
    }
  };
  TrainState state = train(parts.train, parts.test, config.hp, config.variant, on_epoch);
  metrics.close();

  for (const auto& [name, points] : curves) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (const auto& [epoch, value] : points) os << epoch << ' ' << value << '\n';
    write_text(root / "curves" / (name + ".dat"), os.str());
  }
  write_text(root / "checkpoint.json", checkpoint_json(state, hash, config.hp.epochs).dump() + "\n");

  const Evaluation ev = evaluate(state, parts.test);
  result.final = make_report(ev.predictions, ev.labels, config.hp.classes, ev.tree_variances,
                             to_string(config.variant), config.hp.seed);
  {
    std::ostringstream os;
    os << std::setprecision(17) << "row,label,prediction,soft_score\n";
    for (std::size_t i = 0; i < ev.labels.size(); ++i) {
      os << parts.test_rows[i] << ',' << ev.labels[i] << ',' << ev.predictions[i] << ','
         << ev.soft_scores[i] << '\n';
    }
    write_text(root / "predictions.csv", os.str());
  }
  const Json summary = {{"config_hash", hash},
                        {"variant", to_string(config.variant)},
                        {"seed", config.hp.seed},
                        {"protocol", config.protocol()},
                        {"epochs", config.hp.epochs},
                        {"iterations", state.iteration},
                        {"train_samples", result.train_samples},
                        {"test_samples", result.test_samples},
                        {"test_fingerprint", hex64(result.test_fingerprint)},
                        {"test", report_json(result.final)}};
  write_text(summary_path, summary.dump(2) + "\n");
  return result;
}

std::vector<AblationTable> run_ablation(const AblationConfig& config, const std::string& out,
                                        std::ostream* log) {
  if (config.seeds.empty()) throw Error("ablate: at least one seed is required");
  if (config.variants.empty()) throw Error("ablate: at least one variant is required");
  std::vector<AblationTable> tables;
  for (const Protocol& p : config.protocols) {
    AblationTable table;
    table.protocol = protocol_name(p.train_classes, p.test_classes, config.hp.classes);
    for (Variant v : config.variants) {
      std::vector<Scalar> acc, var;
      std::vector<std::vector<Scalar>> f1(static_cast<std::size_t>(config.hp.classes));
      for (std::uint64_t seed : config.seeds) {
        RunConfig rc;
        rc.data = config.data;
        rc.split.train_classes = p.train_classes;
        rc.split.test_classes = p.test_classes;
        rc.split.train_fraction = config.train_fraction;
        rc.split.seed = config.data.seed;
        rc.hp = config.hp;
        rc.hp.seed = seed;
        rc.variant = v;
        const fs::path dir = fs::path(out) / protocol_dir(table.protocol) / to_string(v) /
                             ("seed-" + std::to_string(seed));
        const RunResult r = run_training(rc, dir.string(), true, nullptr);
        if (log) {
          *log << table.protocol << ' ' << to_string(v) << " seed " << seed
               << (r.resumed ? " (resumed)" : "") << " acc " << fixed(r.final.accuracy)
               << " var " << fixed(r.final.tree_variance) << '\n';
        }
        acc.push_back(r.final.accuracy);
        var.push_back(r.final.tree_variance);
        for (std::size_t c = 0; c < f1.size() && c < r.final.per_class.size(); ++c) {
          f1[c].push_back(r.final.per_class[c].f1);
        }
      }
      AblationRow row;
      row.variant = to_string(v);
      row.runs = static_cast<int>(acc.size());
      row.accuracy_mean = mean_of(acc);
      row.accuracy_sd = sd_of(acc);
      row.tree_variance_mean = mean_of(var);
      row.tree_variance_sd = sd_of(var);
      for (const auto& f : f1) row.f1_mean.push_back(mean_of(f));
      table.rows.push_back(row);
    }
    tables.push_back(table);
  }
  fs::create_directories(out);
  write_text(fs::path(out) / "ablation.json", ablation_json(tables).dump(2) + "\n");
  write_text(fs::path(out) / "ablation.md", ablation_markdown(tables));
  return tables;
}

Json ablation_json(const std::vector<AblationTable>& tables) {
  Json out = Json::array();
  for (const auto& t : tables) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
      rows.push_back({{"variant", r.variant},
                      {"runs", r.runs},
                      {"accuracy_mean", r.accuracy_mean},
                      {"accuracy_sd", r.accuracy_sd},
                      {"tree_variance_mean", r.tree_variance_mean},
                      {"tree_variance_sd", r.tree_variance_sd},
                      {"f1_mean", r.f1_mean}});
    }
    out.push_back({{"protocol", t.protocol}, {"rows", rows}});
  }
  return {{"tool", "morf"}, {"version", kVersion}, {"tables", out}};
}

std::string ablation_markdown(const std::vector<AblationTable>& tables) {
  std::ostringstream os;
  for (const auto& t : tables) {
    os << "### " << t.protocol << "\n\n| Variant | Runs | Accuracy | Tree variance |";
    const std::size_t classes = t.rows.empty() ? 0 : t.rows.front().f1_mean.size();
    for (std::size_t c = 0; c < classes; ++c) os << " F1 class " << c + 1 << " |";
    os << "\n|---|---|---|---|";
    for (std::size_t c = 0; c < classes; ++c) os << "---|";
    os << '\n';
    for (const auto& r : t.rows) {
      os << "| " << r.variant << " | " << r.runs << " | " << fixed(r.accuracy_mean) << " ± "
         << fixed(r.accuracy_sd) << " | " << fixed(r.tree_variance_mean) << " ± "
         << fixed(r.tree_variance_sd) << " |";
      for (Scalar f : r.f1_mean) os << ' ' << fixed(f) << " |";
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

std::vector<PairwiseTest> compare_runs(const std::vector<std::string>& dirs, Scalar level) {
  if (dirs.size() < 2) throw Error("compare: at least two run directories are required");
  struct Run {
    std::string name;
    std::string fingerprint;
    std::vector<Index> rows;
    std::vector<Scalar> scores;
  };
  std::vector<Run> runs;
  for (const std::string& d : dirs) {
    const Json summary = read_json(fs::path(d) / "summary.json");
    Run run;
    run.name = summary.at("variant").get<std::string>() + "/seed-" +
               std::to_string(summary.at("seed").get<std::uint64_t>()) + " (" + d + ")";
    run.fingerprint = summary.at("test_fingerprint").get<std::string>();
    std::ifstream in(fs::path(d) / "predictions.csv");
    if (!in) throw Error("compare: missing predictions.csv in '" + d + "'");
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream is(line);
      std::string row, label, pred, score;
      std::getline(is, row, ',');
      std::getline(is, label, ',');
      std::getline(is, pred, ',');
      std::getline(is, score, ',');
      run.rows.push_back(std::stoll(row));
      run.scores.push_back(std::stod(score));
    }
    runs.push_back(std::move(run));
  }
  for (std::size_t k = 1; k < runs.size(); ++k) {
    if (runs[k].fingerprint != runs[0].fingerprint || runs[k].rows != runs[0].rows) {
      throw Error("compare: runs '" + dirs[0] + "' and '" + dirs[k] +
                  "' were evaluated on different test sets");
    }
  }
  std::vector<PairwiseTest> out;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      PairwiseTest t;
      t.a = runs[i].name;
      t.b = runs[j].name;
      t.result = wilcoxon_signed_rank(runs[i].scores, runs[j].scores);
      t.significant = t.result.p_value < level;
      out.push_back(t);
    }
  }
  return out;
}

std::string compare_markdown(const std::vector<PairwiseTest>& tests) {
  std::ostringstream os;
  os << "| Run A | Run B | n | W | p | Method | Significant |\n|---|---|---|---|---|---|---|\n";
  for (const auto& t : tests) {
    os << "| " << t.a << " | " << t.b << " | " << t.result.n << " | " << t.result.statistic
       << " | " << std::setprecision(6) << t.result.p_value << " | "
       << (t.result.degenerate ? "degenerate" : t.result.exact ? "exact" : "normal") << " | "
       << (t.significant ? "yes" : "no") << " |\n";
  }
  return os.str();
}

}  // namespace morf::app

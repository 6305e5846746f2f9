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

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "morf/app.hpp"
#include "morf/verify.hpp"

namespace morf::app {
namespace {

namespace fs = std::filesystem;

std::vector<int> parse_classes(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw Error("invalid class list '" + text + "'");
    out.push_back(v);
  }
  return out;
}

struct DataFlags {
  std::string preset = "ord3-std";
  std::string path;
  int classes = 0;
  std::uint64_t data_seed = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "Synthetic preset (ord3-std, ord3-small, ord5)");
    cmd->add_option("--data", path, "Comma-separated dataset file, label in the last column");
    cmd->add_option("--classes", classes, "Class count");
    cmd->add_option("--data-seed", data_seed, "Seed for dataset generation and the split");
  }

  DataSource resolve() const {
    if (!path.empty()) return file_source(path, classes > 0 ? classes : 3, data_seed);
    DataSource s = preset_source(preset, data_seed);
    if (classes > 0 && classes != s.classes) {
      throw Error("--classes " + std::to_string(classes) + " conflicts with preset '" + preset +
                  "' (" + std::to_string(s.classes) + " classes)");
    }
    return s;
  }
};

struct HyperFlags {
  Hyperparams hp;
  double constant_weight = 0.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--alpha", hp.alpha, "Model learning rate");
    cmd->add_option("--beta", hp.beta, "Weighting-network learning rate");
    cmd->add_option("--batch", hp.batch, "Mini-batch size");
    cmd->add_option("--epochs", hp.epochs, "Training epochs");
    cmd->add_option("--trees", hp.trees, "Trees in the forest");
    cmd->add_option("--depth", hp.depth, "Tree depth");
    cmd->add_option("--hidden", hp.hidden, "Backbone hidden widths")->delimiter(',');
    cmd->add_option("--fc-dim", hp.fc_dim, "FC output width (0: trees x split nodes)");
    cmd->add_option("--tww-hidden", hp.tww_hidden, "Hidden width of each weighting network");
    cmd->add_option("--weight-decay", hp.weight_decay, "L2 weight decay");
    cmd->add_option("--lr-decay", hp.lr_decay, "Learning-rate decay factor");
    cmd->add_option("--lr-decay-every", hp.lr_decay_every, "Epochs between decays");
    cmd->add_option("--constant-weight", constant_weight, "Freeze tree weights to this value");
    cmd->add_flag("--gfs-with-replacement", hp.gfs_with_replacement,
                  "Allow GFS to reuse a coordinate across trees");
  }

  Hyperparams resolve(int classes) const {
    Hyperparams out = hp;
    out.classes = classes;
    if (constant_weight > 0.0) out.constant_weight = constant_weight;
    return out;
  }
};

int cmd_generate(const std::string& preset, std::uint64_t seed, const std::string& out,
                 Index samples, Index dim, double noise, double offset,
                 const std::vector<double>& thresholds) {
  SyntheticSpec spec = synthetic_preset(preset);
  spec.seed = seed;
  if (samples > 0) spec.samples = samples;
  if (dim > 0) spec.dim = dim;
  if (noise >= 0.0) spec.noise = noise;
  if (!std::isnan(offset)) spec.offset = offset;
  if (!thresholds.empty()) {
    spec.thresholds = thresholds;
    spec.classes = static_cast<int>(thresholds.size()) + 1;
  }
  const Dataset data = generate_synthetic(spec);
  fs::create_directories(out);
  const fs::path csv = fs::path(out) / "data.csv";
  save_tabular(data, csv.string());
  const Json manifest = {{"tool", "morf"},
                         {"version", kVersion},
                         {"preset", preset},
                         {"file", "data.csv"},
                         {"samples", spec.samples},
                         {"dim", spec.dim},
                         {"classes", spec.classes},
                         {"thresholds", spec.thresholds},
                         {"offset", spec.offset},
                         {"noise", spec.noise},
                         {"seed", seed},
                         {"fingerprint", hex64(fingerprint(data))}};
  std::ofstream(fs::path(out) / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << "wrote " << data.size() << " samples to " << csv.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta ordinal regression forests: training, ablation and verification"};
  app.set_version_flag("--version", std::string("morf ") + kVersion);
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic ordinal dataset");
  std::string gen_preset = "ord3-std";
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  Index gen_samples = 0;
  Index gen_dim = 0;
  double gen_noise = -1.0;
  double gen_offset = std::nan("");
  std::vector<double> gen_thresholds;
  gen->add_option("--preset", gen_preset, "Preset name");
  gen->add_option("--seed", gen_seed, "Generation seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--samples", gen_samples, "Override sample count");
  gen->add_option("--dim", gen_dim, "Override feature dimension");
  gen->add_option("--noise", gen_noise, "Override latent noise");
  gen->add_option("--offset", gen_offset, "Override latent offset");
  gen->add_option("--thresholds", gen_thresholds, "Override class thresholds")->delimiter(',');

  // train
  auto* tr = app.add_subcommand("train", "Train one variant into a run directory");
  DataFlags tr_data;
  HyperFlags tr_hyper;
  std::string tr_variant = "morf";
  std::string tr_out;
  std::string tr_train_classes;
  std::string tr_test_classes;
  double tr_fraction = 0.8;
  bool tr_resume = false;
  bool tr_verbose = false;
  tr_data.add(tr);
  tr_hyper.add(tr);
  tr->add_option("--variant", tr_variant, "ce, corf, corf+gfs, corf+tww or morf");
  tr->add_option("--seed", tr_hyper.hp.seed, "Run seed (initialization, assignment, shuffling)");
  tr->add_option("--out", tr_out, "Run directory")->required();
  tr->add_option("--train-classes", tr_train_classes, "Classes kept for training, e.g. 1,3");
  tr->add_option("--test-classes", tr_test_classes, "Classes kept for testing, e.g. 1,3");
  tr->add_option("--train-fraction", tr_fraction, "Stratified train fraction");
  tr->add_flag("--resume", tr_resume, "Skip when the directory already holds this configuration");
  tr->add_flag("--verbose", tr_verbose, "Print one line per epoch");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Run the variant ablation across seeds and protocols");
  DataFlags ab_data;
  HyperFlags ab_hyper;
  std::vector<std::uint64_t> ab_seeds{1, 2, 3, 4, 5};
  std::vector<std::string> ab_variants{"corf", "corf+gfs", "corf+tww", "morf"};
  std::vector<std::string> ab_train_classes;
  std::vector<std::string> ab_test_classes;
  double ab_fraction = 0.8;
  std::string ab_out;
  ab_data.add(ab);
  ab_hyper.add(ab);
  ab->add_option("--seeds", ab_seeds, "Run seeds")->delimiter(',');
  ab->add_option("--variants", ab_variants, "Variants to compare")->delimiter(',');
  ab->add_option("--train-classes", ab_train_classes,
                 "Training classes per protocol (repeatable, paired with --test-classes)");
  ab->add_option("--test-classes", ab_test_classes, "Test classes per protocol (repeatable)");
  ab->add_option("--train-fraction", ab_fraction, "Stratified train fraction");
  ab->add_option("--out", ab_out, "Output directory")->required();

  // verify
  auto* ver = app.add_subcommand("verify", "Run a property suite");
  std::string ver_suite;
  verify::SuiteOptions ver_options;
  std::string ver_out;
  ver->add_option("suite", ver_suite, "gradcheck, metagradcheck, forest-invariants, "
                                      "gfs-invariants or reduction")
      ->required();
  ver->add_option("--seed", ver_options.seed, "Suite seed");
  ver->add_option("--cases", ver_options.cases, "Case count (0: suite default)");
  ver->add_option("--out", ver_out, "Write the report as JSON");

  // compare
  auto* cmp = app.add_subcommand("compare", "Pairwise Wilcoxon tests between runs");
  std::vector<std::string> cmp_dirs;
  double cmp_level = 0.05;
  std::string cmp_out;
  cmp->add_option("runs", cmp_dirs, "Run directories")->required()->expected(2, -1);
  cmp->add_option("--level", cmp_level, "Significance level");
  cmp->add_option("--out", cmp_out, "Write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      return cmd_generate(gen_preset, gen_seed, gen_out, gen_samples, gen_dim, gen_noise,
                          gen_offset, gen_thresholds);
    }
    if (*tr) {
      RunConfig rc;
      rc.data = tr_data.resolve();
      rc.hp = tr_hyper.resolve(rc.data.classes);
      rc.variant = parse_variant(tr_variant);
      rc.split.train_classes = parse_classes(tr_train_classes);
      rc.split.test_classes = parse_classes(tr_test_classes);
      rc.split.train_fraction = tr_fraction;
      rc.split.seed = rc.data.seed;
      const RunResult r = run_training(rc, tr_out, tr_resume, tr_verbose ? &std::cerr : nullptr);
      std::cout << to_string(rc.variant) << " seed " << rc.hp.seed << " " << rc.protocol()
                << (r.resumed ? " (resumed)" : "") << ": accuracy " << r.final.accuracy
                << ", tree variance " << r.final.tree_variance << " -> " << tr_out << '\n';
      return 0;
    }
    if (*ab) {
      if (ab_train_classes.size() != ab_test_classes.size()) {
        throw Error("ablate: --train-classes and --test-classes must be given the same number "
                    "of times");
      }
      AblationConfig cfg;
      cfg.data = ab_data.resolve();
      cfg.hp = ab_hyper.resolve(cfg.data.classes);
      cfg.seeds = ab_seeds;
      cfg.train_fraction = ab_fraction;
      cfg.variants.clear();
      for (const auto& v : ab_variants) cfg.variants.push_back(parse_variant(v));
      if (!ab_train_classes.empty()) {
        cfg.protocols.clear();
        for (std::size_t k = 0; k < ab_train_classes.size(); ++k) {
          cfg.protocols.push_back({parse_classes(ab_train_classes[k]),
                                   parse_classes(ab_test_classes[k])});
        }
      }
      const auto tables = run_ablation(cfg, ab_out, &std::cerr);
      std::cout << ablation_markdown(tables);
      return 0;
    }
    if (*ver) {
      const verify::SuiteReport r = verify::run_suite(ver_suite, ver_options);
      const Json doc = {{"suite", r.suite},
                        {"cases", r.cases},
                        {"failures", r.failures},
                        {"max_error", r.max_error},
                        {"ok", r.ok()},
                        {"failing_case", r.failing_case.empty()
                                             ? Json(nullptr)
                                             : Json::parse(r.failing_case)}};
      if (!ver_out.empty()) std::ofstream(ver_out) << doc.dump(2) << '\n';
      std::cout << r.suite << ": " << (r.ok() ? "PASS" : "FAIL") << " (" << r.cases
                << " cases, " << r.failures << " failures, max error " << r.max_error << ", "
                << r.seconds << " s)\n";
      if (!r.ok()) std::cout << "failing case: " << r.failing_case << '\n';
      return r.ok() ? 0 : 1;
    }
    if (*cmp) {
      const auto tests = compare_runs(cmp_dirs, cmp_level);
      std::cout << compare_markdown(tests);
      if (!cmp_out.empty()) {
        Json doc = Json::array();
        for (const auto& t : tests) {
          doc.push_back({{"a", t.a},
                         {"b", t.b},
                         {"n", t.result.n},
                         {"w_plus", t.result.w_plus},
                         {"w_minus", t.result.w_minus},
                         {"statistic", t.result.statistic},
                         {"p_value", t.result.p_value},
                         {"exact", t.result.exact},
                         {"degenerate", t.result.degenerate},
                         {"significant", t.significant}});
        }
        std::ofstream(cmp_out) << doc.dump(2) << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace morf::app

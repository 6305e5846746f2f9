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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

namespace morf::app {
namespace {

namespace fs = std::filesystem;

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "morf");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class AppTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("morf_app_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small synthetic dataset written to disk.
  std::string dataset(Index samples, std::uint64_t seed, const std::string& name) {
    SyntheticSpec spec = synthetic_preset("ord3-small");
    spec.samples = samples;
    spec.seed = seed;
    const std::string p = path(name);
    save_tabular(generate_synthetic(spec), p);
    return p;
  }

  fs::path dir_;
};

TEST(Hashing, Fnv1a) {
  EXPECT_EQ(fnv1a(""), 14695981039346656037ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(RunConfigTest, HashTracksConfiguration) {
  RunConfig a;
  a.data = preset_source("ord3-small", 1);
  RunConfig b = a;
  EXPECT_EQ(a.hash(), b.hash());
  b.hp.beta = 2e-4;
  EXPECT_NE(a.hash(), b.hash());
  b = a;
  b.split.test_classes = {1, 3};
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(b.protocol(), "Train(3)-Test(2)");
}

TEST_F(AppTest, GenerateWritesDatasetAndManifest) {
  EXPECT_EQ(run({"generate", "--preset", "ord3-std", "--seed", "7", "--out", path("nested/gen")}), 0);
  const auto manifest = Json::parse(slurp(dir_ / "nested/gen/manifest.json"));
  EXPECT_EQ(manifest["samples"], 2000);
  EXPECT_EQ(manifest["thresholds"], Json({2.5, 3.5}));
  EXPECT_EQ(load_tabular(path("nested/gen/data.csv"), 3).size(), 2000);
  EXPECT_NE(run({"generate", "--thresholds", "3.5,2.5", "--out", path("bad")}), 0);
  EXPECT_NE(run({"generate", "--preset", "unknown", "--out", path("bad")}), 0);
}

TEST_F(AppTest, TrainRunDirectoryContents) {
  const std::string data = dataset(20, 3, "d20.csv");
  ASSERT_EQ(run({"train", "--data", data, "--classes", "3", "--variant", "morf", "--epochs", "2",
                 "--batch", "16", "--out", path("run")}),
            0);
  for (const char* f : {"VERSION", "config.json", "dataset.json", "metrics.jsonl",
                        "checkpoint.json", "predictions.csv", "summary.json",
                        "curves/test_accuracy.dat", "curves/tree_variance.dat"}) {
    EXPECT_TRUE(fs::exists(dir_ / "run" / f)) << f;
  }
  const auto config = Json::parse(slurp(dir_ / "run/config.json"));
  const auto checkpoint = Json::parse(slurp(dir_ / "run/checkpoint.json"));
  EXPECT_EQ(config["config_hash"], checkpoint["config_hash"]);
  EXPECT_EQ(checkpoint["format"], kCheckpointFormat);
  EXPECT_EQ(config["hyperparams"]["epochs"], 2);

  std::istringstream metrics(slurp(dir_ / "run/metrics.jsonl"));
  std::string line;
  int epoch = 0;
  while (std::getline(metrics, line)) {
    const auto rec = Json::parse(line);
    EXPECT_EQ(rec["epoch"], ++epoch);
    EXPECT_EQ(rec["iterations"], 1);  // 16 training samples, batch 16
    EXPECT_TRUE(rec["test"].contains("tree_variance"));
  }
  EXPECT_EQ(epoch, 2);
  EXPECT_EQ(slurp(dir_ / "run/VERSION"), std::string("morf ") + kVersion + "\n");
}

TEST_F(AppTest, TrainIsByteReproducible) {
  for (const char* variant : {"corf", "morf"}) {
    for (const char* out : {"a", "b"}) {
      ASSERT_EQ(run({"train", "--preset", "ord3-small", "--variant", variant, "--epochs", "2",
                     "--seed", "4", "--out", path(std::string(variant) + out)}),
                0);
    }
    const std::string v(variant);
    EXPECT_EQ(slurp(dir_ / (v + "a") / "metrics.jsonl"), slurp(dir_ / (v + "b") / "metrics.jsonl"));
    EXPECT_EQ(slurp(dir_ / (v + "a") / "checkpoint.json"),
              slurp(dir_ / (v + "b") / "checkpoint.json"));
  }
}

TEST_F(AppTest, ResumeSkipsMatchingConfiguration) {
  RunConfig rc;
  rc.data = preset_source("ord3-small", 1);
  rc.hp.epochs = 1;
  const RunResult first = run_training(rc, path("r"), true);
  EXPECT_FALSE(first.resumed);
  const RunResult second = run_training(rc, path("r"), true);
  EXPECT_TRUE(second.resumed);
  EXPECT_EQ(second.final.accuracy, first.final.accuracy);
  EXPECT_EQ(second.test_fingerprint, first.test_fingerprint);
  rc.hp.epochs = 2;
  EXPECT_FALSE(run_training(rc, path("r"), true).resumed);
}

TEST_F(AppTest, CheckpointRoundTrip) {
  RunConfig rc;
  rc.data = preset_source("ord3-small", 2);
  rc.hp.epochs = 1;
  run_training(rc, path("r"), false);
  const auto doc = Json::parse(slurp(dir_ / "r/checkpoint.json"));
  TrainState state = restore_checkpoint(doc, 16);
  EXPECT_EQ(checkpoint_json(state, doc["config_hash"], doc["epoch"]).dump(), doc.dump());
  Json bad = doc;
  bad["version"] = 99;
  EXPECT_THROW(restore_checkpoint(bad, 16), Error);
}

TEST_F(AppTest, CompareRunsAgainstEnumeration) {
  const std::string data = dataset(49, 5, "d49.csv");
  for (const char* v : {"corf", "morf"}) {
    ASSERT_EQ(run({"train", "--data", data, "--variant", v, "--epochs", "2", "--seed", "3",
                   "--out", path(v)}),
              0);
  }
  const auto tests = compare_runs({path("corf"), path("morf")});
  ASSERT_EQ(tests.size(), 1u);
  const auto scores = [&](const std::string& run_dir) {
    std::ifstream in(fs::path(run_dir) / "predictions.csv");
    std::string line;
    std::getline(in, line);
    std::vector<Scalar> out;
    while (std::getline(in, line)) out.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    return out;
  };
  const auto a = scores(path("corf"));
  const auto b = scores(path("morf"));
  EXPECT_EQ(a.size(), 10u);
  const auto expected = oracle::wilcoxon_enumerate(a, b);
  EXPECT_NEAR(tests[0].result.p_value, expected.p_value, 1e-12);
  EXPECT_EQ(tests[0].significant, expected.p_value < 0.05);

  const auto self = compare_runs({path("corf"), path("corf")});
  EXPECT_EQ(self[0].result.p_value, 1.0);
  EXPECT_TRUE(self[0].result.degenerate);
  EXPECT_EQ(run({"compare", path("corf"), path("morf"), "--out", path("cmp.json")}), 0);
  EXPECT_TRUE(fs::exists(dir_ / "cmp.json"));
}

TEST_F(AppTest, CompareRejectsMismatchedTestSets) {
  ASSERT_EQ(run({"train", "--preset", "ord3-small", "--variant", "corf", "--epochs", "1",
                 "--out", path("a")}),
            0);
  ASSERT_EQ(run({"train", "--preset", "ord3-small", "--variant", "corf", "--epochs", "1",
                 "--data-seed", "9", "--out", path("b")}),
            0);
  EXPECT_THROW(compare_runs({path("a"), path("b")}), Error);
  EXPECT_NE(run({"compare", path("a"), path("b")}), 0);
  EXPECT_NE(run({"compare", path("a")}), 0);
}

TEST_F(AppTest, AblateTwoProtocols) {
  const std::vector<std::string> args{
      "ablate", "--preset", "ord3-small", "--epochs", "1", "--seeds", "1,2",
      "--variants", "corf,morf", "--train-classes", "1,2,3", "--test-classes", "1,3",
      "--train-classes", "1,3", "--test-classes", "1,3", "--out", path("ab")};
  ASSERT_EQ(run(args), 0);
  const auto doc = Json::parse(slurp(dir_ / "ab/ablation.json"));
  ASSERT_EQ(doc["tables"].size(), 2u);
  EXPECT_EQ(doc["tables"][0]["protocol"], "Train(3)-Test(2)");
  EXPECT_EQ(doc["tables"][1]["protocol"], "Train(2)-Test(2)");
  for (const auto& table : doc["tables"]) {
    ASSERT_EQ(table["rows"].size(), 2u);
    for (const auto& row : table["rows"]) {
      EXPECT_EQ(row["runs"], 2);
      EXPECT_TRUE(row.contains("tree_variance_mean"));
      EXPECT_TRUE(row.contains("accuracy_sd"));
    }
  }
  const std::string md = slurp(dir_ / "ab/ablation.md");
  EXPECT_NE(md.find("Tree variance"), std::string::npos);
  const auto stamp = fs::last_write_time(dir_ / "ab/train3-test2/morf/seed-1/metrics.jsonl");
  ASSERT_EQ(run(args), 0);
  EXPECT_EQ(fs::last_write_time(dir_ / "ab/train3-test2/morf/seed-1/metrics.jsonl"), stamp);
  EXPECT_NE(run({"ablate", "--train-classes", "1,3", "--out", path("x")}), 0);
}

TEST_F(AppTest, VerifyCommand) {
  EXPECT_EQ(run({"verify", "gfs-invariants", "--cases", "20", "--out", path("v.json")}), 0);
  EXPECT_EQ(Json::parse(slurp(dir_ / "v.json"))["ok"], true);
  EXPECT_NE(run({"verify", "nothing"}), 0);
}

}  // namespace
}  // namespace morf::app

// Copyright 2026 The comom Authors.
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

// Drives the built binary through the shell.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>

#include "comom/comom.hpp"
#include "support/corpus.hpp"
#include "support/util.hpp"

namespace comom {
namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run_cli(const testing::TempDir& dir, const std::string& args) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("'") + COMOM_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = testing::read_file(out);
  o.err = testing::read_file(err);
  return o;
}

std::string quoted(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

TEST(Cli, EvalGoldAgainstItself) {
  testing::TempDir dir("cli");
  export_dataset(testing::make_corpus({.sentences = 60, .seed = 2}), dir / "gold.jsonl");
  const auto g = quoted(dir / "gold.jsonl");
  const Outcome o = run_cli(dir, "eval --json " + g + " " + g);
  ASSERT_EQ(o.code, 0) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_EQ(j["macro_f1"], 1.0);
  EXPECT_EQ(j["provenance"]["command"], "eval");
  const Outcome text = run_cli(dir, "eval --fail-under 0.5 " + g + " " + g);
  EXPECT_EQ(text.code, 0);
  EXPECT_NE(text.out.find("MACRO-F1"), std::string::npos);
}

TEST(Cli, EvalMismatchedIdsExitOne) {
  testing::TempDir dir("cli");
  export_dataset(testing::make_corpus({.sentences = 10, .seed = 2}), dir / "a.jsonl");
  export_dataset(testing::make_corpus({.sentences = 10, .seed = 2, .id_prefix = "z"}), dir / "b.jsonl");
  const Outcome o = run_cli(dir, "eval " + quoted(dir / "a.jsonl") + " " + quoted(dir / "b.jsonl"));
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(nlohmann::json::parse(o.err)["error"], "IdMismatch");
}

TEST(Cli, LintFindingsExitOne) {
  testing::TempDir dir("cli");
  Dataset d;
  d.sentences.push_back(make_sentence("a", "máy này tốt hơn", {Quintuple{{TokenSpan{0, 1}}, ComparisonLabel::kComPlus}}));
  export_dataset(d, dir / "d.jsonl");
  const Outcome o = run_cli(dir, "lint --json " + quoted(dir / "d.jsonl"));
  EXPECT_EQ(o.code, 1);
  EXPECT_EQ(nlohmann::json::parse(o.out)["count"], 1);
  export_dataset(testing::make_corpus({.sentences = 30}), dir / "ok.jsonl");
  EXPECT_EQ(run_cli(dir, "lint " + quoted(dir / "ok.jsonl")).code, 0);
}

TEST(Cli, AugmentThenStats) {
  testing::TempDir dir("cli");
  export_dataset(testing::make_corpus({.sentences = 80, .seed = 3}), dir / "src.jsonl");
  testing::write_file(dir / "spec.json", R"({"targets": {"COM+": 5, "SUP-": 3}, "seed": 4, "version": "v-test"})");
  const Outcome a = run_cli(dir, "augment " + quoted(dir / "src.jsonl") + " --spec " + quoted(dir / "spec.json") +
                                     " --synthetic-only -o " + quoted(dir / "syn.jsonl"));
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "syn.jsonl.provenance.json"));
  const Outcome s = run_cli(dir, "stats --json " + quoted(dir / "syn.jsonl"));
  ASSERT_EQ(s.code, 0) << s.err;
  const auto j = nlohmann::json::parse(s.out);
  EXPECT_EQ(j["label"]["COM+"]["count"], 5);
  EXPECT_EQ(j["label"]["SUP-"]["count"], 3);
  EXPECT_EQ(j["label"]["EQL"]["count"], 0);

  // Same seed, same bytes.
  const Outcome b = run_cli(dir, "augment " + quoted(dir / "src.jsonl") + " --spec " + quoted(dir / "spec.json") +
                                     " --synthetic-only -o " + quoted(dir / "syn2.jsonl"));
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(testing::read_file(dir / "syn.jsonl"), testing::read_file(dir / "syn2.jsonl"));
}

TEST(Cli, TrainAndPredict) {
  testing::TempDir dir("cli");
  export_dataset(testing::make_corpus({.sentences = 80, .seed = 3}), dir / "d.jsonl");
  testing::write_file(dir / "train.json", R"({"learning_rate": 0.01, "epochs": 3, "hash_dim": 16384})");
  const auto d = quoted(dir / "d.jsonl");
  const auto cfg = " --config " + quoted(dir / "train.json");
  ASSERT_EQ(run_cli(dir, "train tag " + d + cfg + " -o " + quoted(dir / "t.model")).code, 0);
  ASSERT_EQ(run_cli(dir, "train quadruple " + d + cfg + " --bootstrap 2 -o " + quoted(dir / "q.manifest.json")).code, 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "q.manifest.m1.model"));
  testing::write_file(dir / "pipeline.json", R"({
    "stage1": {"mode": "tagger-derived"},
    "stage2": {"ensemble": {"task": "tag", "members": [{"model": "t.model"}]}},
    "stage3": {"ensemble": "q.manifest.json"}
  })");
  const Outcome p = run_cli(dir, "predict " + d + " --pipeline " + quoted(dir / "pipeline.json") + " -o " +
                                     quoted(dir / "pred.jsonl") + " --report " + quoted(dir / "run.json"));
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(import_dataset(dir / "pred.jsonl").size(), 80u);
  EXPECT_EQ(nlohmann::json::parse(testing::read_file(dir / "run.json"))["sentences"], 80);
}

TEST(Cli, UsageAndRuntimeErrors) {
  testing::TempDir dir("cli");
  EXPECT_EQ(run_cli(dir, "").code, 2);
  EXPECT_EQ(run_cli(dir, "frobnicate").code, 2);
  EXPECT_EQ(run_cli(dir, "eval only-one.jsonl").code, 2);
  EXPECT_EQ(run_cli(dir, "train nonsense x.jsonl -o y").code, 2);
  const Outcome missing = run_cli(dir, "stats " + quoted(dir / "absent.jsonl"));
  EXPECT_EQ(missing.code, 3);
  EXPECT_EQ(nlohmann::json::parse(missing.err)["error"], "IoError");
  const Outcome preset = run_cli(dir, "experiment E4 --data " + quoted(dir.path()) + " -o " + quoted(dir / "o"));
  EXPECT_EQ(preset.code, 3);
  EXPECT_EQ(nlohmann::json::parse(preset.err)["error"], "MissingDatasetVersion");
  EXPECT_EQ(run_cli(dir, "--version").code, 0);
}

}  // namespace
}  // namespace comom

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

#include <gtest/gtest.h>

#include "comom/native.hpp"
#include "comom/pipeline.hpp"
#include "support/corpus.hpp"
#include "support/fixed_backend.hpp"
#include "support/util.hpp"

namespace comom {
namespace {

using testing::code_of;

const std::vector<Tag> kFixtureTags = {Tag::kO, Tag::kBeginSubject, Tag::kInsideSubject, Tag::kO,
                                       Tag::kBeginPredicate};

Dataset fixture_dataset() {
  Dataset d;
  d.sentences = {make_sentence("f1", "máy này tốt hơn hẳn"), make_sentence("f2", "pin kia bền hơn nhiều"),
                 make_sentence("f3", "camera ấy đẹp hơn rõ")};
  return d;
}

PipelineBackends fixture_backends(bool comparative = true, StageLabel label = StageLabel::kComPlus) {
  PipelineBackends b;
  b.stage1 = testing::sentence_backend(comparative);
  b.stage2 = {testing::tag_backend(kFixtureTags)};
  b.stage3 = testing::quad_backend(label);
  return b;
}

PipelineConfig binary_config() {
  PipelineConfig c;
  c.stage1_mode = Stage1Mode::kBinary;
  return c;
}

TEST(Predict, MockFixtureYieldsOneQuintuple) {
  const Sentence s = fixture_dataset().sentences[0];
  const auto out = predict_sentence(s, binary_config(), fixture_backends());
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].subject(), (TokenSpan{1, 2}));
  EXPECT_EQ(out[0].predicate(), (TokenSpan{4, 4}));
  EXPECT_FALSE(out[0].object().has_value());
  EXPECT_FALSE(out[0].aspect().has_value());
  EXPECT_EQ(out[0].label, ComparisonLabel::kComPlus);
}

TEST(Predict, NonComparativeGateSkipsLaterStages) {
  auto backends = fixture_backends(false);
  const Sentence s = fixture_dataset().sentences[0];
  const auto t = trace_sentence(s, binary_config(), backends);
  EXPECT_FALSE(t.gated_comparative);
  EXPECT_TRUE(t.quintuples.empty());
  EXPECT_EQ(static_cast<testing::FixedBackend&>(*backends.stage2[0]).calls, 0);
}

TEST(Predict, StageOneTieIsNonComparative) {
  auto backends = fixture_backends();
  auto tie = std::make_shared<testing::FixedBackend>("tie");
  tie->sentence = [](const Sentence&) { return LogitVector{0.5, 0.5}; };
  backends.stage1 = tie;
  EXPECT_TRUE(predict_sentence(fixture_dataset().sentences[0], binary_config(), backends).empty());
}

TEST(Predict, AllNoneDemotes) {
  const auto result = run_pipeline(fixture_dataset(), binary_config(), fixture_backends(true, StageLabel::kNone));
  EXPECT_EQ(result.report.demotions, 3u);
  EXPECT_EQ(result.report.gated_comparative, 3u);
  EXPECT_EQ(result.report.comparative, 0u);
  for (const auto& s : result.predictions.sentences) EXPECT_TRUE(s.quintuples.empty());
}

TEST(Predict, TaggerDerivedGateIsAnySpan) {
  PipelineConfig c;
  auto backends = fixture_backends();
  backends.stage1 = nullptr;
  EXPECT_EQ(predict_sentence(fixture_dataset().sentences[0], c, backends).size(), 1u);
  backends.stage2 = {testing::tag_backend({})};
  const auto t = trace_sentence(fixture_dataset().sentences[0], c, backends);
  EXPECT_FALSE(t.gated_comparative);
  EXPECT_EQ(t.gated_comparative, !t.elements.empty());
}

TEST(Predict, WeightedTaggersAndDedupe) {
  // Two taggers disagree; the heavier one wins. Every quadruple maps to the
  // same label, and duplicates cannot appear since quadruples are distinct.
  PipelineConfig c = binary_config();
  c.stage2_weights = EnsembleWeights{0.3, 0.7};
  auto backends = fixture_backends();
  backends.stage2 = {testing::tag_backend({Tag::kBeginObject}), testing::tag_backend(kFixtureTags)};
  const auto t = trace_sentence(fixture_dataset().sentences[0], c, backends);
  EXPECT_EQ(t.elements.of(ElementKind::kSubject), std::vector<TokenSpan>{(TokenSpan{1, 2})});
  EXPECT_TRUE(t.elements.of(ElementKind::kObject).empty());
  c.stage2_weights = EnsembleWeights{0.3};
  EXPECT_EQ(code_of([&] { run_pipeline(fixture_dataset(), c, backends); }), ErrorCode::kWeightCountMismatch);
}

TEST(Predict, TruncationIsReported) {
  PipelineConfig c = binary_config();
  c.max_quadruples = 2;
  auto backends = fixture_backends();
  backends.stage2 = {testing::tag_backend({Tag::kBeginSubject, Tag::kO, Tag::kBeginSubject, Tag::kO, Tag::kBeginPredicate})};
  const auto r = run_pipeline(fixture_dataset(), c, backends);
  EXPECT_EQ(r.report.truncations, 0u);
  backends.stage2 = {testing::tag_backend({Tag::kBeginSubject, Tag::kBeginPredicate, Tag::kBeginSubject,
                                           Tag::kBeginPredicate, Tag::kBeginSubject})};
  const auto t = run_pipeline(fixture_dataset(), c, backends);
  EXPECT_EQ(t.report.truncations, 3u);
  EXPECT_EQ(t.traces[0].candidates, 2u);
}

TEST(Run, EmptyDataset) {
  const auto r = run_pipeline(Dataset{}, binary_config(), fixture_backends());
  EXPECT_TRUE(r.predictions.empty());
  EXPECT_EQ(r.report.sentences, 0u);
  EXPECT_EQ(r.report.quintuples, 0u);
}

TEST(Run, ThreeSentencesInOrderAndDeterministic) {
  PipelineConfig c = binary_config();
  const auto a = run_pipeline(fixture_dataset(), c, fixture_backends());
  ASSERT_EQ(a.predictions.size(), 3u);
  EXPECT_EQ(a.predictions.sentences[0].id, "f1");
  EXPECT_EQ(a.predictions.sentences[2].id, "f3");
  EXPECT_EQ(a.report.quintuples, 3u);
  c.workers = 3;
  const auto b = run_pipeline(fixture_dataset(), c, fixture_backends());
  EXPECT_EQ(dataset_to_string(a.predictions), dataset_to_string(b.predictions));
  EXPECT_EQ(b.report.workers, 3u);
}

TEST(Run, FailureWritesPartialResults) {
  testing::TempDir dir("pipeline");
  auto backends = fixture_backends();
  auto tagger = testing::tag_backend(kFixtureTags);
  tagger->fail_on = "f3";
  backends.stage2 = {tagger};
  try {
    run_pipeline(fixture_dataset(), binary_config(), backends, dir / "out.partial");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendUnavailable);
    EXPECT_NE(std::string(e.what()).find("f3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("stage 2"), std::string::npos);
  }
  const Dataset partial = import_dataset(dir / "out.partial");
  ASSERT_EQ(partial.size(), 2u);
  EXPECT_EQ(partial.sentences[1].id, "f2");
}

TEST(Run, BinaryModeNeedsStageOne) {
  auto backends = fixture_backends();
  backends.stage1 = nullptr;
  EXPECT_EQ(code_of([&] { run_pipeline(fixture_dataset(), binary_config(), backends); }),
            ErrorCode::kInvalidArgument);
}

TEST(Document, ParsesAndOpensNativeManifests) {
  testing::TempDir dir("pipeline");
  const Dataset d = testing::make_corpus({.sentences = 80, .seed = 3});
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.epochs = 3;
  tc.hash_dim = 1u << 14;
  train_native(Task::kSentence, d, tc).model.save(dir / "s.model");
  for (int i = 0; i < 3; ++i) {
    tc.seed = static_cast<std::uint64_t>(i);
    train_native(Task::kTag, d, tc).model.save(dir / ("t" + std::to_string(i) + ".model"));
  }
  train_native(Task::kQuadruple, d, tc).model.save(dir / "q.model");

  nlohmann::json tag_manifest = {{"task", "tag"},
                                 {"combine", "weighted"},
                                 {"members",
                                  {{{"model", "t0.model"}, {"weight", 0.2}},
                                   {{"model", "t1.model"}, {"weight", 0.3}},
                                   {{"model", "t2.model"}, {"weight", 0.5}}}}};
  write_json_file(dir / "tag.manifest.json", tag_manifest);
  const nlohmann::json doc_json = {
      {"stage1", {{"mode", "binary"}, {"ensemble", {{"task", "sentence"}, {"members", {{{"model", "s.model"}}}}}}}},
      {"stage2", {{"ensemble", "tag.manifest.json"}}},
      {"stage3", {{"ensemble", {{"task", "quadruple"}, {"members", {{{"model", "q.model"}}}}}}}},
      {"max_quadruples", 64}};
  PipelineDocument doc = pipeline_document_from_json(doc_json);
  EXPECT_EQ(doc.config.stage1_mode, Stage1Mode::kBinary);
  EXPECT_EQ(doc.config.max_quadruples, 64u);
  const auto backends = open_pipeline(doc, dir.path());
  EXPECT_EQ(backends.stage2.size(), 3u);
  ASSERT_TRUE(doc.config.stage2_weights.has_value());
  EXPECT_EQ(doc.config.stage2_weights->values, (std::vector<double>{0.2, 0.3, 0.5}));
  const auto r = run_pipeline(d, doc.config, backends);
  EXPECT_EQ(r.predictions.size(), d.size());

  auto swapped = doc_json;
  swapped["stage3"]["ensemble"] = "tag.manifest.json";
  PipelineDocument bad = pipeline_document_from_json(swapped);
  EXPECT_EQ(code_of([&] { open_pipeline(bad, dir.path()); }), ErrorCode::kTaskMismatch);
}

TEST(Document, Errors) {
  EXPECT_EQ(code_of([] { pipeline_document_from_json(nlohmann::json::array()); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { pipeline_document_from_json({{"stage1", {{"mode", "psychic"}}}}); }),
            ErrorCode::kInvalidArgument);
  const nlohmann::json strict = {{"stage1", {{"mode", "tagger-derived"}}},
                                 {"stage2", {{"ensemble", "x"}}},
                                 {"stage3", {{"ensemble", "y"}}},
                                 {"decode", "strict"}};
  EXPECT_EQ(code_of([&] { pipeline_document_from_json(strict); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace comom

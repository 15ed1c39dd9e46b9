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

#include "comom/core.hpp"
#include "comom/random.hpp"
#include "comom/utf8.hpp"
#include "support/corpus.hpp"
#include "support/util.hpp"

namespace comom {
namespace {

using testing::code_of;

TEST(Labels, RoundTripNames) {
  for (ComparisonLabel l : kComparisonLabels) EXPECT_EQ(parse_label(label_name(l)), l);
  EXPECT_EQ(label_name(ComparisonLabel::kSupMinus), "SUP-");
  EXPECT_EQ(code_of([] { parse_label("BETTER"); }), ErrorCode::kUnknownLabel);
}

TEST(Labels, StageAlphabetEndsWithNone) {
  EXPECT_EQ(kStageLabelCount, 9u);
  EXPECT_EQ(stage_label_name(StageLabel::kNone), "NONE");
  for (ComparisonLabel l : kComparisonLabels) {
    EXPECT_EQ(to_comparison_label(to_stage_label(l)), l);
  }
  EXPECT_FALSE(to_comparison_label(StageLabel::kNone).has_value());
}

TEST(Tags, NineTagAlphabet) {
  EXPECT_EQ(kTagCount, 9u);
  EXPECT_EQ(tag_name(Tag::kO), "O");
  EXPECT_EQ(tag_name(begin_tag(ElementKind::kPredicate)), "B-PRED");
  EXPECT_EQ(tag_name(inside_tag(ElementKind::kAspect)), "I-ASP");
  EXPECT_FALSE(tag_kind(Tag::kO).has_value());
}

TEST(Tokenize, SplitsOnUnicodeWhitespaceWithCodePointOffsets) {
  const auto toks = tokenize("pin  tốt hơn");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1].text, "tốt");
  EXPECT_EQ(toks[1].begin, 5u);
  EXPECT_EQ(toks[1].end, 8u);
  EXPECT_TRUE(tokenize("   ").empty());
}

TEST(Utf8, MalformedBytesBecomeReplacementCharacter) {
  const std::u32string cps = utf8::decode(std::string("a\xff" "b"));
  ASSERT_EQ(cps.size(), 3u);
  EXPECT_EQ(cps[1], U'�');
  EXPECT_EQ(utf8::encode(utf8::decode("hiệu năng")), "hiệu năng");
}

TEST(Sentence, ValidationRejectsBadSpans) {
  Quintuple q;
  q.label = ComparisonLabel::kEql;
  EXPECT_EQ(code_of([&] { make_sentence("a", "x y", {q}); }), ErrorCode::kInvalidSpan);
  q.slot(ElementKind::kSubject) = TokenSpan{1, 2};
  EXPECT_EQ(code_of([&] { make_sentence("a", "x y", {q}); }), ErrorCode::kInvalidSpan);
  q.slot(ElementKind::kSubject) = TokenSpan{1, 1};
  EXPECT_NO_THROW(make_sentence("a", "x y", {q}));
}

TEST(Argmax, TiesGoToLowestIndex) {
  const std::vector<double> v = {1, 3, 3, 2};
  EXPECT_EQ(argmax(v), 1u);
}

TEST(Bio, ProjectsSpansToTags) {
  Quintuple q;
  q.slot(ElementKind::kSubject) = TokenSpan{1, 2};
  q.slot(ElementKind::kPredicate) = TokenSpan{4, 4};
  q.label = ComparisonLabel::kComPlus;
  const Sentence s = make_sentence("s", "a b c d e", {q});
  const std::vector<Tag> expected = {Tag::kO, Tag::kBeginSubject, Tag::kInsideSubject, Tag::kO,
                                     Tag::kBeginPredicate};
  EXPECT_EQ(tags_for_quintuples(s), expected);
}

TEST(Bio, CrossKindOverlapIsAnError) {
  Quintuple q;
  q.slot(ElementKind::kSubject) = TokenSpan{0, 1};
  q.slot(ElementKind::kObject) = TokenSpan{1, 2};
  const Sentence s = make_sentence("s", "a b c", {q});
  EXPECT_EQ(code_of([&] { tags_for_quintuples(s); }), ErrorCode::kOverlappingElements);
}

TEST(Bio, AdjacentSameKindSpansKeepTheirBoundary) {
  Quintuple a, b;
  a.slot(ElementKind::kAspect) = TokenSpan{0, 1};
  b.slot(ElementKind::kAspect) = TokenSpan{2, 2};
  const Sentence s = make_sentence("s", "a b c", {a, b});
  const std::vector<Tag> expected = {Tag::kBeginAspect, Tag::kInsideAspect, Tag::kBeginAspect};
  EXPECT_EQ(tags_for_quintuples(s), expected);
}

TEST(Random, UniformIndexStaysInRangeAndIsSeeded) {
  Rng a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const auto x = uniform_index(a, 7);
    EXPECT_LT(x, 7u);
    EXPECT_EQ(x, uniform_index(b, 7));
  }
}

TEST(Corpus, GeneratorCoversAllLabelsAndValidates) {
  const Dataset d = testing::make_corpus({.sentences = 200, .seed = 3});
  std::set<ComparisonLabel> seen;
  for (const Sentence& s : d.sentences) {
    for (const Quintuple& q : s.quintuples) seen.insert(q.label);
  }
  EXPECT_EQ(seen.size(), kLabelCount);
  EXPECT_NO_THROW(validate_dataset(d));
  EXPECT_EQ(testing::make_corpus({.sentences = 200, .seed = 3}).sentences, d.sentences);
}

}  // namespace
}  // namespace comom

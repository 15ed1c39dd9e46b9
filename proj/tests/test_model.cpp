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

#include <cmath>
#include <sstream>

#include "comom/native.hpp"
#include "support/corpus.hpp"
#include "support/util.hpp"

namespace comom {
namespace {

using testing::code_of;

// The default learning rate suits pretrained encoders; the linear baseline
// needs a larger step to learn anything in a few epochs.
TrainConfig desk_config(std::uint64_t seed = 1) {
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.seed = seed;
  c.hash_dim = 1u << 16;
  return c;
}

const Dataset& train_corpus() {
  static const Dataset d = testing::make_corpus({.sentences = 300, .seed = 1});
  return d;
}

const Dataset& held_out_corpus() {
  static const Dataset d = testing::make_corpus({.sentences = 200, .seed = 2, .id_prefix = "h"});
  return d;
}

FeatureVector random_features(Rng& rng, std::uint32_t dim) {
  FeatureBuilder fb(dim, 0);
  const std::size_t n = 1 + uniform_index(rng, 5);
  for (std::size_t i = 0; i < n; ++i) fb.add("f" + std::to_string(uniform_index(rng, 1000)), 0.5 + uniform_unit(rng));
  return fb.finish();
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_EQ(c.learning_rate, 3e-5);
  EXPECT_EQ(c.batch_size, 32u);
  EXPECT_EQ(c.epochs, 15u);
  c.epochs = 0;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { train_config_from_json(nlohmann::json{{"learning_rate", -1}}); }),
            ErrorCode::kInvalidArgument);
  TrainConfig d = desk_config(4);
  EXPECT_EQ(train_config_from_json(train_config_to_json(d)), d);
}

// Analytic gradients against central differences on small random models.
TEST(LinearModel, GradientMatchesFiniteDifferences) {
  Rng rng(3);
  constexpr std::uint32_t kDim = 12;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t classes = 2 + uniform_index(rng, 8);
    LinearModel m(Task::kTag, classes, kDim, 0);
    for (double& w : m.weights()) w = uniform_unit(rng) * 2 - 1;
    for (double& b : m.bias()) b = uniform_unit(rng) * 2 - 1;
    std::vector<Example> ex;
    for (int i = 0; i < 6; ++i) {
      ex.push_back({random_features(rng, kDim), static_cast<std::uint32_t>(uniform_index(rng, classes))});
    }
    const Gradient g = m.gradient(ex);
    constexpr double h = 1e-5;
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + h;
      const double up = m.loss(ex);
      param = saved - h;
      const double down = m.loss(ex);
      param = saved;
      const double numeric = (up - down) / (2 * h);
      const double denom = std::max(1e-6, std::abs(analytic) + std::abs(numeric));
      EXPECT_LT(std::abs(analytic - numeric) / denom, 1e-4) << analytic << " vs " << numeric;
    };
    for (std::size_t k = 0; k < m.weights().size(); ++k) check(m.weights()[k], g.weights[k]);
    for (std::size_t c = 0; c < classes; ++c) check(m.bias()[c], g.bias[c]);
  }
}

TEST(TrainNative, SeparableToySetIsLearnedExactly) {
  Dataset d;
  for (int i = 0; i < 10; ++i) {
    d.sentences.push_back(make_sentence("c" + std::to_string(i), "alpha beta gamma x" + std::to_string(i),
                                        {Quintuple{{TokenSpan{0, 0}, std::nullopt, std::nullopt, TokenSpan{1, 1}},
                                                   ComparisonLabel::kComPlus}}));
    d.sentences.push_back(make_sentence("n" + std::to_string(i), "delta epsilon zeta y" + std::to_string(i)));
  }
  const auto result = train_native(Task::kSentence, d, desk_config());
  auto backend = result.backend();
  const auto logits = classify_sentence(*backend, d.sentences);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(argmax(logits[i]), d.sentences[i].is_comparative() ? 1u : 0u) << d.sentences[i].id;
  }
}

TEST(TrainNative, SameSeedGivesIdenticalModelBytes) {
  testing::TempDir dir("model");
  train_native(Task::kQuadruple, train_corpus(), desk_config(9)).model.save(dir / "a.bin");
  train_native(Task::kQuadruple, train_corpus(), desk_config(9)).model.save(dir / "b.bin");
  const std::string a = testing::read_file(dir / "a.bin");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, testing::read_file(dir / "b.bin"));
  EXPECT_EQ(a.substr(0, 8), std::string("COMOMLM\0", 8));
}

TEST(TrainNative, ReloadReproducesLogits) {
  testing::TempDir dir("model");
  const auto result = train_native(Task::kTag, train_corpus(), desk_config());
  result.model.save(dir / "tag.bin");
  auto loaded = NativeBackend::from_file(dir / "tag.bin");
  auto original = result.backend();
  const std::span<const Sentence> probe(held_out_corpus().sentences.data(), 20);
  EXPECT_EQ(tag_tokens(*loaded, probe), tag_tokens(*original, probe));
  EXPECT_EQ(loaded->model(Task::kTag).train_config(), result.model.train_config());
}

TEST(TrainNative, CorruptModelFileIsRejected) {
  testing::TempDir dir("model");
  testing::write_file(dir / "bad.bin", "NOTAMODEL");
  EXPECT_EQ(code_of([&] { LinearModel::load(dir / "bad.bin"); }), ErrorCode::kModelFormatError);
}

TEST(TrainNative, LossTrendsDown) {
  const auto result = train_native(Task::kSentence, train_corpus(), desk_config());
  const auto& losses = result.model.epoch_losses();
  ASSERT_EQ(losses.size(), 15u);
  for (std::size_t i = 1; i < losses.size(); ++i) {
    EXPECT_LE(losses[i], losses[i - 1] * (1 + 1e-2) + 1e-9) << "epoch " << i;
  }
  EXPECT_LT(losses.back(), 0.5 * losses.front());
}

TEST(TrainNative, Errors) {
  EXPECT_EQ(code_of([] { train_native(Task::kTag, Dataset{}, desk_config()); }), ErrorCode::kEmptyTrainingSet);
  Dataset plain;
  plain.sentences.push_back(make_sentence("p", "máy đẹp"));
  EXPECT_EQ(code_of([&] { train_native(Task::kSentence, plain, desk_config()); }), ErrorCode::kTaskMismatch);
  EXPECT_EQ(code_of([&] { train_native(Task::kQuadruple, plain, desk_config()); }), ErrorCode::kEmptyTrainingSet);
}

TEST(NativeBackend, ShapesAndCapabilities) {
  auto backend = train_native(Task::kTag, train_corpus(), desk_config()).backend();
  const Sentence s = make_sentence("x", "a b c d e");
  const auto rows = tag_tokens(*backend, std::span<const Sentence>(&s, 1));
  ASSERT_EQ(rows[0].size(), 5u);
  for (const auto& r : rows[0]) EXPECT_EQ(r.size(), kTagCount);
  EXPECT_TRUE(tag_tokens(*backend, {}).empty());
  EXPECT_EQ(code_of([&] { classify_sentence(*backend, std::span<const Sentence>(&s, 1)); }),
            ErrorCode::kCapabilityMissing);
}

TEST(NativeBackend, AllAbsentQuadrupleIsRejected) {
  auto backend = train_native(Task::kQuadruple, train_corpus(), desk_config()).backend();
  const Sentence& s = held_out_corpus().sentences[0];
  EXPECT_EQ(code_of([&] { classify_quadruple(*backend, s, Quadruple{}); }), ErrorCode::kInvalidArgument);
}

// Held-out behaviour of the three baselines on the templated corpus.
TEST(NativeBaselines, SentenceClassifierSeparatesHeldOutComparatives) {
  auto backend = train_native(Task::kSentence, train_corpus(), desk_config()).backend();
  const auto logits = classify_sentence(*backend, held_out_corpus().sentences);
  std::size_t total = 0, right = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!held_out_corpus().sentences[i].is_comparative()) continue;
    ++total;
    right += logits[i][1] > logits[i][0];
  }
  ASSERT_GT(total, 0u);
  EXPECT_GE(static_cast<double>(right) / static_cast<double>(total), 0.9);
}

TEST(NativeBaselines, TaggerMarksHonAsPredicate) {
  auto backend = train_native(Task::kTag, train_corpus(), desk_config()).backend();
  const auto& held = held_out_corpus().sentences;
  const auto logits = tag_tokens(*backend, held);
  std::size_t total = 0, right = 0;
  for (std::size_t s = 0; s < held.size(); ++s) {
    for (std::size_t i = 0; i < held[s].size(); ++i) {
      if (held[s].tokens[i].text != "hơn") continue;
      ++total;
      const Tag t = static_cast<Tag>(argmax(logits[s][i]));
      right += t == Tag::kBeginPredicate || t == Tag::kInsidePredicate;
    }
  }
  ASSERT_GT(total, 0u);
  EXPECT_GE(static_cast<double>(right) / static_cast<double>(total), 0.8);
}

// Each predicate feature shows up in few quadruple batches, so at 1e-2 the
// model is still underfit after 15 epochs (about 0.71 here).
TEST(NativeBaselines, QuadrupleClassifierRecoversGoldLabels) {
  TrainConfig config = desk_config();
  config.learning_rate = 0.1;
  auto backend = train_native(Task::kQuadruple, train_corpus(), config).backend();
  std::size_t total = 0, right = 0;
  for (const Sentence& s : held_out_corpus().sentences) {
    for (const Quintuple& q : s.quintuples) {
      ++total;
      right += argmax(classify_quadruple(*backend, s, q.elements)) == index_of(q.label);
    }
  }
  ASSERT_GT(total, 0u);
  EXPECT_GE(static_cast<double>(right) / static_cast<double>(total), 0.8);
}

}  // namespace
}  // namespace comom

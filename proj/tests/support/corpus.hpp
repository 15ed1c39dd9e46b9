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

// Seeded generator of small templated phone-review corpora covering all eight
// comparison labels, for tests and desk-scale experiments.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "comom/core.hpp"
#include "comom/random.hpp"
#include "json.hpp"

namespace comom::testing {

inline const std::vector<std::string>& phone_names() {
  static const std::vector<std::string> kNames = {
      "iPhone 13", "Galaxy S22", "Pixel 7",   "Xiaomi 12",     "Oppo Reno8",
      "Vivo V25",  "Nokia G50",  "Realme 10", "iPhone 14 Pro", "Redmi Note 11"};
  return kNames;
}

inline const std::vector<std::string>& aspect_words() {
  static const std::vector<std::string> kAspects = {"pin",  "camera",    "màn hình", "hiệu năng",
                                                    "loa",  "thiết kế", "sạc",      "bàn phím"};
  return kAspects;
}

inline const std::vector<std::string>& predicates_for(ComparisonLabel label) {
  static const std::map<ComparisonLabel, std::vector<std::string>> kPredicates = {
      {ComparisonLabel::kComPlus, {"tốt hơn", "đẹp hơn", "mượt hơn", "bền hơn"}},
      {ComparisonLabel::kComMinus, {"kém hơn", "tệ hơn", "yếu hơn", "chậm hơn"}},
      {ComparisonLabel::kCom, {"to hơn", "dày hơn", "nặng hơn", "dài hơn"}},
      {ComparisonLabel::kSupPlus, {"tốt nhất", "đẹp nhất", "mượt nhất"}},
      {ComparisonLabel::kSupMinus, {"tệ nhất", "kém nhất", "yếu nhất"}},
      {ComparisonLabel::kSup, {"to nhất", "nặng nhất", "dày nhất"}},
      {ComparisonLabel::kEql, {"ngang với", "bằng", "tương đương với"}},
      {ComparisonLabel::kDif, {"khác", "khác hẳn", "không giống"}},
  };
  return kPredicates.at(label);
}

// Accumulates words and hands back the token span of each appended phrase.
class SentenceBuilder {
 public:
  TokenSpan add(const std::string& phrase) {
    std::istringstream in(phrase);
    std::string w;
    const std::size_t start = words_.size();
    while (in >> w) words_.push_back(w);
    return TokenSpan{start, words_.size() - 1};
  }

  const std::vector<std::string>& words() const { return words_; }

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (i) out.push_back(' ');
      out += words_[i];
    }
    return out;
  }

 private:
  std::vector<std::string> words_;
};

struct CorpusOptions {
  std::size_t sentences = 500;
  double non_comparative = 0.35;
  double multi = 0.15;
  std::uint64_t seed = 1;
  std::string id_prefix = "s";
};

namespace detail {

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

inline std::pair<std::string, std::string> two_phones(Rng& rng) {
  const auto& names = phone_names();
  const std::size_t a = uniform_index(rng, names.size());
  std::size_t b = uniform_index(rng, names.size() - 1);
  if (b >= a) ++b;
  return {names[a], names[b]};
}

inline Quintuple quint(std::optional<TokenSpan> sub, std::optional<TokenSpan> obj,
                       std::optional<TokenSpan> asp, std::optional<TokenSpan> pred, ComparisonLabel l) {
  return Quintuple{{sub, obj, asp, pred}, l};
}

inline std::pair<SentenceBuilder, std::vector<Quintuple>> comparative_sentence(ComparisonLabel label,
                                                                                Rng& rng) {
  SentenceBuilder b;
  std::vector<Quintuple> qs;
  const auto [x, y] = two_phones(rng);
  const std::string asp = pick(aspect_words(), rng);
  const std::string pred = pick(predicates_for(label), rng);
  const bool alt = uniform_index(rng, 2) == 1;
  switch (label) {
    case ComparisonLabel::kComPlus:
    case ComparisonLabel::kComMinus:
    case ComparisonLabel::kCom: {
      if (alt) {
        b.add("so với");
        auto o = b.add(y);
        b.add("thì");
        auto a = b.add(asp);
        b.add("của");
        auto s = b.add(x);
        auto p = b.add(pred);
        qs.push_back(quint(s, o, a, p, label));
      } else {
        auto s = b.add(x);
        b.add("có");
        auto a = b.add(asp);
        auto p = b.add(pred);
        auto o = b.add(y);
        qs.push_back(quint(s, o, a, p, label));
      }
      break;
    }
    case ComparisonLabel::kSupPlus:
    case ComparisonLabel::kSupMinus:
    case ComparisonLabel::kSup: {
      if (alt) {
        b.add("trong các máy thì");
        auto s = b.add(x);
        auto p = b.add(pred);
        b.add("về");
        auto a = b.add(asp);
        qs.push_back(quint(s, std::nullopt, a, p, label));
      } else {
        auto s = b.add(x);
        b.add("có");
        auto a = b.add(asp);
        auto p = b.add(pred);
        b.add("trong tầm giá");
        qs.push_back(quint(s, std::nullopt, a, p, label));
      }
      break;
    }
    case ComparisonLabel::kEql: {
      auto a = b.add(asp);
      b.add("của");
      auto s = b.add(x);
      auto p = b.add(pred);
      auto o = b.add(y);
      if (alt) b.add("luôn");
      qs.push_back(quint(s, o, a, p, label));
      break;
    }
    case ComparisonLabel::kDif: {
      auto s = b.add(x);
      auto p = b.add(pred);
      auto o = b.add(y);
      if (alt) {
        b.add("về");
        auto a = b.add(asp);
        qs.push_back(quint(s, o, a, p, label));
      } else {
        b.add("chút nào");
        qs.push_back(quint(s, o, std::nullopt, p, label));
      }
      break;
    }
  }
  return {b, qs};
}

// "X có <asp1> <pred1> Y nhưng <asp2> lại <pred2>": two comparisons sharing
// subject and object.
inline std::pair<SentenceBuilder, std::vector<Quintuple>> multi_sentence(Rng& rng) {
  static const std::array<ComparisonLabel, 3> kCom = {ComparisonLabel::kComPlus, ComparisonLabel::kComMinus,
                                                      ComparisonLabel::kCom};
  const std::size_t i1 = uniform_index(rng, 3);
  const ComparisonLabel l1 = kCom[i1];
  const ComparisonLabel l2 = kCom[(i1 + 1 + uniform_index(rng, 2)) % 3];
  const auto [x, y] = two_phones(rng);
  const auto& aspects = aspect_words();
  const std::size_t ai = uniform_index(rng, aspects.size());
  std::size_t aj = uniform_index(rng, aspects.size() - 1);
  if (aj >= ai) ++aj;
  SentenceBuilder b;
  auto s = b.add(x);
  b.add("có");
  auto a1 = b.add(aspects[ai]);
  auto p1 = b.add(pick(predicates_for(l1), rng));
  auto o = b.add(y);
  b.add("nhưng");
  auto a2 = b.add(aspects[aj]);
  b.add("lại");
  auto p2 = b.add(pick(predicates_for(l2), rng));
  return {b, {quint(s, o, a1, p1, l1), quint(s, o, a2, p2, l2)}};
}

inline SentenceBuilder plain_sentence(Rng& rng) {
  SentenceBuilder b;
  const std::string x = pick(phone_names(), rng);
  const std::string asp = pick(aspect_words(), rng);
  switch (uniform_index(rng, 5)) {
    case 0:
      b.add(x + " có " + asp + " khá ổn");
      break;
    case 1:
      b.add("mình vừa mua " + x + " tuần trước");
      break;
    case 2:
      b.add(asp + " của " + x + " dùng cũng được");
      break;
    case 3:
      b.add("shop giao hàng nhanh đóng gói cẩn thận");
      break;
    default:
      b.add(x + " giá bao nhiêu vậy shop");
      break;
  }
  return b;
}

}  // namespace detail

// Labels cycle through all eight so every label is represented even in small
// corpora.
inline Dataset make_corpus(const CorpusOptions& options = {}) {
  Rng rng(options.seed);
  Dataset d;
  d.provenance.version = "synthetic-test";
  d.provenance.seed = options.seed;
  std::size_t next_label = 0;
  for (std::size_t i = 0; i < options.sentences; ++i) {
    const double u = uniform_unit(rng);
    SentenceBuilder b;
    std::vector<Quintuple> qs;
    if (u < options.non_comparative) {
      b = detail::plain_sentence(rng);
    } else if (u < options.non_comparative + options.multi) {
      std::tie(b, qs) = detail::multi_sentence(rng);
    } else {
      const ComparisonLabel label = kComparisonLabels[next_label++ % kLabelCount];
      std::tie(b, qs) = detail::comparative_sentence(label, rng);
    }
    d.sentences.push_back(make_sentence(options.id_prefix + std::to_string(i), b.text(), std::move(qs)));
  }
  return d;
}

// A canonical-JSONL record whose text carries U+00A0 / U+200B noise and whose
// spans index the raw whitespace tokens, plus the span texts expected after
// cleaning.
struct NoisyRecord {
  std::string line;
  std::vector<std::array<std::optional<std::string>, kElementKindCount>> expected;
};

inline NoisyRecord make_noisy_record(const Sentence& clean, Rng& rng) {
  static const std::array<const char*, 6> kSeparators = {
      " ", "\u00A0", "  ", " \u200B ", "\u00A0\u200B ", " \u00A0 "};
  const std::size_t n = clean.size();
  std::string raw;
  std::vector<std::size_t> raw_index(n);
  std::size_t raw_tokens = 0;
  auto emit_separator = [&](bool edge) {
    const char* sep = kSeparators[uniform_index(rng, edge ? 3 : kSeparators.size())];
    raw += sep;
    // A zero-width character between two spaces forms a raw token of its own.
    if (std::string_view(sep).find("\u200B") != std::string_view::npos) ++raw_tokens;
  };
  if (uniform_index(rng, 3) == 0) emit_separator(true);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) emit_separator(false);
    std::string word = clean.tokens[i].text;
    switch (uniform_index(rng, 5)) {
      case 0: word = "\u200B" + word; break;
      case 1: word += "\u200B"; break;
      default: break;
    }
    raw += word;
    raw_index[i] = raw_tokens++;
  }
  if (uniform_index(rng, 3) == 0) raw += "\u00A0";

  NoisyRecord rec;
  nlohmann::ordered_json j;
  j["id"] = clean.id;
  j["text"] = raw;
  j["quintuples"] = nlohmann::ordered_json::array();
  for (const Quintuple& q : clean.quintuples) {
    nlohmann::ordered_json qj;
    std::array<std::optional<std::string>, kElementKindCount> texts;
    for (ElementKind kind : kElementKinds) {
      const auto& span = q.slot(kind);
      const std::string key(element_kind_name(kind));
      if (!span) {
        qj[key] = nullptr;
        continue;
      }
      qj[key] = {raw_index[span->start], raw_index[span->end]};
      texts[index_of(kind)] = clean.span_text(*span);
    }
    qj["label"] = std::string(label_name(q.label));
    j["quintuples"].push_back(std::move(qj));
    rec.expected.push_back(texts);
  }
  rec.line = j.dump();
  return rec;
}

}  // namespace comom::testing

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

// Domain types shared by every stage: comparison labels, the 9-tag BIO
// alphabet, token spans, quintuples, sentences and datasets.

#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comom/error.hpp"
#include "comom/utf8.hpp"

namespace comom {

// ---------------------------------------------------------------------------
// Comparison labels.

enum class ComparisonLabel : std::uint8_t {
  kDif = 0,
  kEql,
  kSupPlus,
  kSupMinus,
  kSup,
  kComPlus,
  kComMinus,
  kCom,
};

inline constexpr std::size_t kLabelCount = 8;

inline constexpr std::array<ComparisonLabel, kLabelCount> kComparisonLabels = {
    ComparisonLabel::kDif,     ComparisonLabel::kEql,    ComparisonLabel::kSupPlus,
    ComparisonLabel::kSupMinus, ComparisonLabel::kSup,    ComparisonLabel::kComPlus,
    ComparisonLabel::kComMinus, ComparisonLabel::kCom};

inline constexpr std::array<std::string_view, kLabelCount> kLabelNames = {
    "DIF", "EQL", "SUP+", "SUP-", "SUP", "COM+", "COM-", "COM"};

inline constexpr std::size_t index_of(ComparisonLabel label) {
  return static_cast<std::size_t>(label);
}

inline constexpr std::string_view label_name(ComparisonLabel label) {
  return kLabelNames[index_of(label)];
}

inline std::optional<ComparisonLabel> try_parse_label(std::string_view text) {
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (kLabelNames[i] == text) return kComparisonLabels[i];
  }
  return std::nullopt;
}

// Exact, case-sensitive match against the eight label strings.
inline ComparisonLabel parse_label(std::string_view text) {
  if (auto label = try_parse_label(text)) return *label;
  fail(ErrorCode::kUnknownLabel, "unknown comparison label '" + std::string(text) + "'");
}

// The 9-way alphabet of the quadruple classifier: the eight labels in their
// fixed order followed by NONE ("this quadruple is not a comparison").
enum class StageLabel : std::uint8_t {
  kDif = 0,
  kEql,
  kSupPlus,
  kSupMinus,
  kSup,
  kComPlus,
  kComMinus,
  kCom,
  kNone,
};

inline constexpr std::size_t kStageLabelCount = 9;

inline constexpr StageLabel to_stage_label(ComparisonLabel label) {
  return static_cast<StageLabel>(label);
}

inline constexpr std::optional<ComparisonLabel> to_comparison_label(StageLabel label) {
  if (label == StageLabel::kNone) return std::nullopt;
  return static_cast<ComparisonLabel>(label);
}

inline constexpr std::string_view stage_label_name(StageLabel label) {
  if (label == StageLabel::kNone) return "NONE";
  return kLabelNames[static_cast<std::size_t>(label)];
}

inline std::optional<StageLabel> try_parse_stage_label(std::string_view text) {
  if (text == "NONE") return StageLabel::kNone;
  if (auto label = try_parse_label(text)) return to_stage_label(*label);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Element kinds and the BIO tag alphabet.

enum class ElementKind : std::uint8_t { kSubject = 0, kObject, kAspect, kPredicate };

inline constexpr std::size_t kElementKindCount = 4;

inline constexpr std::array<ElementKind, kElementKindCount> kElementKinds = {
    ElementKind::kSubject, ElementKind::kObject, ElementKind::kAspect,
    ElementKind::kPredicate};

inline constexpr std::size_t index_of(ElementKind kind) {
  return static_cast<std::size_t>(kind);
}

// Field names used by the canonical file format.
inline constexpr std::string_view element_kind_name(ElementKind kind) {
  constexpr std::array<std::string_view, kElementKindCount> kNames = {
      "subject", "object", "aspect", "predicate"};
  return kNames[index_of(kind)];
}

inline std::optional<ElementKind> try_parse_element_kind(std::string_view text) {
  for (ElementKind kind : kElementKinds) {
    if (element_kind_name(kind) == text) return kind;
  }
  return std::nullopt;
}

enum class Tag : std::uint8_t {
  kO = 0,
  kBeginSubject,
  kInsideSubject,
  kBeginObject,
  kInsideObject,
  kBeginAspect,
  kInsideAspect,
  kBeginPredicate,
  kInsidePredicate,
};

inline constexpr std::size_t kTagCount = 9;

inline constexpr std::array<std::string_view, kTagCount> kTagNames = {
    "O", "B-SUB", "I-SUB", "B-OBJ", "I-OBJ", "B-ASP", "I-ASP", "B-PRED", "I-PRED"};

inline constexpr std::size_t index_of(Tag tag) { return static_cast<std::size_t>(tag); }

inline constexpr std::string_view tag_name(Tag tag) { return kTagNames[index_of(tag)]; }

inline std::optional<Tag> try_parse_tag(std::string_view text) {
  for (std::size_t i = 0; i < kTagCount; ++i) {
    if (kTagNames[i] == text) return static_cast<Tag>(i);
  }
  return std::nullopt;
}

inline constexpr Tag begin_tag(ElementKind kind) {
  return static_cast<Tag>(1 + 2 * index_of(kind));
}

inline constexpr Tag inside_tag(ElementKind kind) {
  return static_cast<Tag>(2 + 2 * index_of(kind));
}

inline constexpr std::optional<ElementKind> tag_kind(Tag tag) {
  if (tag == Tag::kO) return std::nullopt;
  return static_cast<ElementKind>((index_of(tag) - 1) / 2);
}

inline constexpr bool is_begin(Tag tag) {
  return tag != Tag::kO && (index_of(tag) % 2) == 1;
}

// ---------------------------------------------------------------------------
// Spans, quadruples and quintuples.

// Inclusive token-index range.
struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t index) const { return start <= index && index <= end; }
  bool overlaps(const TokenSpan& other) const {
    return start <= other.end && other.start <= end;
  }

  auto operator<=>(const TokenSpan&) const = default;
};

// The four element slots of a comparison, indexed by ElementKind. A candidate
// produced by quadruple generation has exactly this shape.
using ElementSlots = std::array<std::optional<TokenSpan>, kElementKindCount>;
using Quadruple = ElementSlots;

inline bool any_present(const ElementSlots& slots) {
  return std::any_of(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); });
}

struct Quintuple {
  ElementSlots elements;
  ComparisonLabel label = ComparisonLabel::kDif;

  const std::optional<TokenSpan>& slot(ElementKind kind) const {
    return elements[index_of(kind)];
  }
  std::optional<TokenSpan>& slot(ElementKind kind) { return elements[index_of(kind)]; }

  const std::optional<TokenSpan>& subject() const { return slot(ElementKind::kSubject); }
  const std::optional<TokenSpan>& object() const { return slot(ElementKind::kObject); }
  const std::optional<TokenSpan>& aspect() const { return slot(ElementKind::kAspect); }
  const std::optional<TokenSpan>& predicate() const { return slot(ElementKind::kPredicate); }

  auto operator<=>(const Quintuple&) const = default;
};

// ---------------------------------------------------------------------------
// Tokens, sentences and datasets.

// A whitespace-delimited word. begin/end are code-point offsets into the
// owning sentence's normalized text, end exclusive.
struct Token {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

inline constexpr bool is_whitespace(char32_t cp) {
  switch (cp) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
    case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline std::vector<Token> tokenize(std::string_view text) {
  const std::u32string cps = utf8::decode(text);
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_whitespace(cps[i])) ++i;
    if (i == cps.size()) break;
    const std::size_t begin = i;
    while (i < cps.size() && !is_whitespace(cps[i])) ++i;
    tokens.push_back(Token{utf8::encode(std::u32string_view(cps).substr(begin, i - begin)),
                           begin, i});
  }
  return tokens;
}

struct Sentence {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<Quintuple> quintuples;

  std::size_t size() const { return tokens.size(); }
  bool is_comparative() const { return !quintuples.empty(); }

  std::string span_text(const TokenSpan& span) const {
    std::string out;
    for (std::size_t i = span.start; i <= span.end && i < tokens.size(); ++i) {
      if (i != span.start) out.push_back(' ');
      out += tokens[i].text;
    }
    return out;
  }

  bool operator==(const Sentence&) const = default;
};

inline void validate_span(const TokenSpan& span, std::size_t token_count) {
  if (span.start > span.end || span.end >= token_count) {
    fail(ErrorCode::kInvalidSpan, "span [" + std::to_string(span.start) + "," +
                                      std::to_string(span.end) + "] outside a " +
                                      std::to_string(token_count) + "-token sentence");
  }
}

inline void validate_slots(const ElementSlots& slots, std::size_t token_count) {
  if (!any_present(slots)) {
    fail(ErrorCode::kInvalidSpan, "comparison has no element present");
  }
  for (const auto& span : slots) {
    if (span) validate_span(*span, token_count);
  }
}

inline void validate_sentence(const Sentence& sentence) {
  for (const Quintuple& q : sentence.quintuples) {
    try {
      validate_slots(q.elements, sentence.size());
    } catch (const Error& e) {
      fail(e.code(), "sentence '" + sentence.id + "': " + e.detail());
    }
  }
}

// Builds a sentence from already-normalized text and validates its spans.
inline Sentence make_sentence(std::string id, std::string text,
                              std::vector<Quintuple> quintuples = {}) {
  Sentence s;
  s.id = std::move(id);
  s.tokens = tokenize(text);
  s.text = std::move(text);
  s.quintuples = std::move(quintuples);
  validate_sentence(s);
  return s;
}

struct Provenance {
  std::string version;
  std::optional<std::uint64_t> seed;
  std::string note;

  bool operator==(const Provenance&) const = default;
};

struct Dataset {
  std::vector<Sentence> sentences;
  Provenance provenance;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

inline void validate_dataset(const Dataset& dataset) {
  std::set<std::string_view> ids;
  for (const Sentence& s : dataset.sentences) {
    if (!ids.insert(s.id).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate sentence id '" + s.id + "'");
    }
    validate_sentence(s);
  }
}

// ---------------------------------------------------------------------------
// Logits.

using LogitVector = std::vector<double>;
using TagLogits = std::vector<LogitVector>;

inline constexpr std::size_t kSentenceClassCount = 2;

// Ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------
// BIO projection.

// Projects the union of all element spans onto one tag per token. Same-kind
// spans from different quintuples may coincide or overlap and are merged;
// spans of different kinds must not share a token.
inline std::vector<Tag> tags_for_quintuples(const Sentence& sentence) {
  const std::size_t n = sentence.size();
  std::vector<std::optional<ElementKind>> owner(n);
  std::vector<bool> starts(n, false);
  for (const Quintuple& q : sentence.quintuples) {
    for (ElementKind kind : kElementKinds) {
      const auto& span = q.slot(kind);
      if (!span) continue;
      validate_span(*span, n);
      for (std::size_t i = span->start; i <= span->end; ++i) {
        if (owner[i] && *owner[i] != kind) {
          fail(ErrorCode::kOverlappingElements,
               "sentence '" + sentence.id + "': token " + std::to_string(i) + " is both " +
                   std::string(element_kind_name(*owner[i])) + " and " +
                   std::string(element_kind_name(kind)));
        }
        owner[i] = kind;
      }
      starts[span->start] = true;
    }
  }
  std::vector<Tag> tags(n, Tag::kO);
  for (std::size_t i = 0; i < n; ++i) {
    if (!owner[i]) continue;
    const bool continues = i > 0 && owner[i - 1] == owner[i] && !starts[i];
    tags[i] = continues ? inside_tag(*owner[i]) : begin_tag(*owner[i]);
  }
  return tags;
}

}  // namespace comom

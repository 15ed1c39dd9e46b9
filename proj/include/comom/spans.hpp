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

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "comom/core.hpp"
#include "comom/error.hpp"

namespace comom {

// Extracted elements of one sentence, one sorted set of disjoint spans per
// element kind.
struct ElementSets {
  std::array<std::vector<TokenSpan>, kElementKindCount> sets;

  const std::vector<TokenSpan>& of(ElementKind kind) const { return sets[index_of(kind)]; }
  std::vector<TokenSpan>& of(ElementKind kind) { return sets[index_of(kind)]; }

  bool empty() const {
    return std::all_of(sets.begin(), sets.end(), [](const auto& s) { return s.empty(); });
  }
  std::size_t span_count() const {
    std::size_t n = 0;
    for (const auto& s : sets) n += s.size();
    return n;
  }

  bool operator==(const ElementSets&) const = default;
};

// Lenient BIO decoding: B starts a span, I extends a running span of the same
// kind, and an I following O or another kind opens a span of its own kind.
inline ElementSets decode_tags(std::span<const Tag> tags) {
  ElementSets out;
  std::optional<ElementKind> running;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto kind = tag_kind(tags[i]);
    if (!kind) {
      running.reset();
      continue;
    }
    if (!is_begin(tags[i]) && running == kind) {
      out.of(*kind).back().end = i;
    } else {
      out.of(*kind).push_back(TokenSpan{i, i});
      running = kind;
    }
  }
  return out;
}

// Per-token argmax (ties toward the lower tag id, so O wins ties) followed by
// lenient BIO decoding.
inline std::vector<Tag> argmax_tags(const TagLogits& logits) {
  std::vector<Tag> tags;
  tags.reserve(logits.size());
  for (const LogitVector& row : logits) {
    if (row.size() != kTagCount) {
      fail(ErrorCode::kShapeMismatch,
           "tag logits must have width " + std::to_string(kTagCount) + ", got " +
               std::to_string(row.size()));
    }
    tags.push_back(static_cast<Tag>(argmax(row)));
  }
  return tags;
}

inline ElementSets decode_spans(const TagLogits& logits) {
  const std::vector<Tag> tags = argmax_tags(logits);
  return decode_tags(tags);
}

// Union of the gold element spans of a sentence, by kind.
inline ElementSets element_sets_of(const Sentence& sentence) {
  ElementSets out;
  for (const Quintuple& q : sentence.quintuples) {
    for (ElementKind kind : kElementKinds) {
      const auto& span = q.slot(kind);
      if (!span) continue;
      auto& set = out.of(kind);
      if (std::find(set.begin(), set.end(), *span) == set.end()) set.push_back(*span);
    }
  }
  for (auto& set : out.sets) std::sort(set.begin(), set.end());
  return out;
}

struct QuadrupleList {
  std::vector<Quadruple> items;
  bool truncated = false;
  // Size of the untruncated product (saturating).
  std::uint64_t full_size = 0;
};

// Number of candidates the product would hold: an empty set contributes one
// "absent" value for its slot instead of annihilating the product.
inline std::uint64_t quadruple_product_size(const ElementSets& sets) {
  std::uint64_t n = 1;
  for (const auto& set : sets.sets) {
    const std::uint64_t f = std::max<std::uint64_t>(1, set.size());
    if (n > std::numeric_limits<std::uint64_t>::max() / f) return std::numeric_limits<std::uint64_t>::max();
    n *= f;
  }
  return n;
}

// Cartesian product over the four sets in subject-major order, cut at `cap`.
inline QuadrupleList generate_quadruples(const ElementSets& sets, std::size_t cap = 256) {
  if (sets.empty()) fail(ErrorCode::kAllSetsEmpty, "no extracted element to combine");
  QuadrupleList out;
  out.full_size = quadruple_product_size(sets);

  auto choices = [&](ElementKind kind) {
    std::vector<std::optional<TokenSpan>> c;
    for (const TokenSpan& s : sets.of(kind)) c.emplace_back(s);
    if (c.empty()) c.emplace_back(std::nullopt);
    return c;
  };
  const auto subjects = choices(ElementKind::kSubject);
  const auto objects = choices(ElementKind::kObject);
  const auto aspects = choices(ElementKind::kAspect);
  const auto predicates = choices(ElementKind::kPredicate);

  out.items.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(out.full_size, cap)));
  for (const auto& sub : subjects) {
    for (const auto& obj : objects) {
      for (const auto& asp : aspects) {
        for (const auto& pred : predicates) {
          if (out.items.size() >= cap) {
            out.truncated = true;
            return out;
          }
          out.items.push_back(Quadruple{sub, obj, asp, pred});
        }
      }
    }
  }
  return out;
}

}  // namespace comom

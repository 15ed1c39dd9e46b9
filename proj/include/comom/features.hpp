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

// Sparse hashed features for the native linear baselines: word uni/bigrams and
// character 3-5 grams, plus slot-aware features for quadruple candidates.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "comom/core.hpp"
#include "comom/utf8.hpp"

namespace comom {

inline constexpr std::uint32_t kDefaultHashDim = 1u << 18;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t salt = 0) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ (salt * 0x9E3779B97F4A7C15ull);
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct FeatureVector {
  std::vector<std::uint32_t> indices;  // strictly increasing, each < dim
  std::vector<double> values;

  std::size_t size() const { return indices.size(); }
  bool operator==(const FeatureVector&) const = default;
};

class FeatureBuilder {
 public:
  FeatureBuilder(std::uint32_t dim, std::uint64_t salt) : dim_(dim), salt_(salt) {}

  void add(std::string_view name, double value = 1.0) {
    raw_.emplace_back(static_cast<std::uint32_t>(fnv1a64(name, salt_) % dim_), value);
  }

  void add(std::string_view prefix, std::string_view name, double value = 1.0) {
    scratch_.assign(prefix);
    scratch_.push_back('=');
    scratch_.append(name);
    add(scratch_, value);
  }

  // Merges colliding indices and scales the vector to unit L2 norm.
  FeatureVector finish() {
    std::sort(raw_.begin(), raw_.end());
    FeatureVector fv;
    for (const auto& [index, value] : raw_) {
      if (!fv.indices.empty() && fv.indices.back() == index) {
        fv.values.back() += value;
      } else {
        fv.indices.push_back(index);
        fv.values.push_back(value);
      }
    }
    double norm = 0;
    for (double v : fv.values) norm += v * v;
    if (norm > 0) {
      norm = std::sqrt(norm);
      for (double& v : fv.values) v /= norm;
    }
    raw_.clear();
    return fv;
  }

 private:
  std::uint32_t dim_;
  std::uint64_t salt_;
  std::vector<std::pair<std::uint32_t, double>> raw_;
  std::string scratch_;
};

namespace detail {

// ASCII-only lowercasing; other scripts pass through unchanged.
inline std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline void add_char_ngrams(FeatureBuilder& fb, std::string_view prefix, std::string_view word,
                            double weight) {
  std::u32string cps = utf8::decode(fold_case(word));
  cps.insert(cps.begin(), U'<');
  cps.push_back(U'>');
  for (std::size_t n = 3; n <= 5; ++n) {
    if (cps.size() < n) break;
    for (std::size_t i = 0; i + n <= cps.size(); ++i) {
      fb.add(prefix, utf8::encode(std::u32string_view(cps).substr(i, n)), weight);
    }
  }
}

inline std::string word_at(const std::vector<Token>& tokens, std::ptrdiff_t i) {
  if (i < 0) return "<s>";
  if (static_cast<std::size_t>(i) >= tokens.size()) return "</s>";
  return fold_case(tokens[static_cast<std::size_t>(i)].text);
}

inline std::string shape_of(std::string_view word) {
  bool digit = false, upper = false, alpha = false;
  for (unsigned char c : word) {
    digit = digit || (c >= '0' && c <= '9');
    upper = upper || (c >= 'A' && c <= 'Z');
    alpha = alpha || (c >= 'a' && c <= 'z') || c >= 0x80;
  }
  std::string s;
  if (upper) s += 'U';
  if (alpha) s += 'a';
  if (digit) s += 'd';
  if (s.empty()) s = "p";
  return s;
}

}  // namespace detail

inline FeatureVector sentence_features(const std::vector<Token>& tokens, std::uint32_t dim,
                                       std::uint64_t salt) {
  FeatureBuilder fb(dim, salt);
  const auto n = static_cast<std::ptrdiff_t>(tokens.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    fb.add("w", detail::word_at(tokens, i));
    detail::add_char_ngrams(fb, "c", tokens[static_cast<std::size_t>(i)].text, 0.5);
  }
  for (std::ptrdiff_t i = -1; i < n; ++i) {
    fb.add("b", detail::word_at(tokens, i) + " " + detail::word_at(tokens, i + 1));
  }
  return fb.finish();
}

// Context window features for the word at `i`.
inline FeatureVector token_features(const std::vector<Token>& tokens, std::size_t i,
                                    std::uint32_t dim, std::uint64_t salt) {
  FeatureBuilder fb(dim, salt);
  const auto p = static_cast<std::ptrdiff_t>(i);
  const std::string w0 = detail::word_at(tokens, p);
  const std::string wm1 = detail::word_at(tokens, p - 1);
  const std::string wp1 = detail::word_at(tokens, p + 1);
  fb.add("w0", w0);
  fb.add("w-1", wm1);
  fb.add("w+1", wp1);
  fb.add("w-2", detail::word_at(tokens, p - 2));
  fb.add("w+2", detail::word_at(tokens, p + 2));
  fb.add("w-3", detail::word_at(tokens, p - 3));
  fb.add("w+3", detail::word_at(tokens, p + 3));
  fb.add("b-1", wm1 + " " + w0);
  fb.add("b+1", w0 + " " + wp1);
  fb.add("t-1", detail::word_at(tokens, p - 2) + " " + wm1);
  fb.add("t+1", wp1 + " " + detail::word_at(tokens, p + 2));
  fb.add("shape", detail::shape_of(tokens[i].text));
  fb.add("shape-1", p > 0 ? detail::shape_of(tokens[i - 1].text) : "<s>");
  fb.add("shape+1", i + 1 < tokens.size() ? detail::shape_of(tokens[i + 1].text) : "</s>");
  detail::add_char_ngrams(fb, "c", tokens[i].text, 0.5);
  fb.add("bias");
  return fb.finish();
}

// Features of a candidate (subject, object, aspect, predicate) combination in
// its sentence: slot contents, predicate context and the relative layout of
// the slots.
inline FeatureVector quadruple_features(const Sentence& sentence, const Quadruple& quad,
                                        std::uint32_t dim, std::uint64_t salt) {
  FeatureBuilder fb(dim, salt);
  constexpr std::array<std::string_view, kElementKindCount> kSlot = {"S", "O", "A", "P"};
  const auto& tokens = sentence.tokens;
  for (ElementKind kind : kElementKinds) {
    const auto& span = quad[index_of(kind)];
    const std::string slot(kSlot[index_of(kind)]);
    if (!span) {
      fb.add(slot + "?", "absent");
      continue;
    }
    fb.add(slot + "?", "present");
    std::string phrase;
    for (std::size_t i = span->start; i <= span->end; ++i) {
      const std::string w = detail::fold_case(tokens[i].text);
      fb.add(slot + "w", w);
      if (!phrase.empty()) phrase.push_back(' ');
      phrase += w;
    }
    fb.add(slot + "phrase", phrase);
  }
  const auto& pred = quad[index_of(ElementKind::kPredicate)];
  if (pred) {
    const auto start = static_cast<std::ptrdiff_t>(pred->start);
    const auto end = static_cast<std::ptrdiff_t>(pred->end);
    fb.add("P-1", detail::word_at(tokens, start - 1));
    fb.add("P-2", detail::word_at(tokens, start - 2));
    fb.add("P+1", detail::word_at(tokens, end + 1));
    fb.add("P+2", detail::word_at(tokens, end + 2));
    fb.add("Plast", detail::word_at(tokens, end));
    for (std::size_t i = pred->start; i <= pred->end; ++i) {
      detail::add_char_ngrams(fb, "Pc", tokens[i].text, 0.3);
    }
  }

  // Relative layout: which slot precedes which and how far apart they are.
  auto bucket = [](std::size_t gap) -> std::string {
    if (gap == 0) return "0";
    if (gap <= 2) return "1-2";
    if (gap <= 5) return "3-5";
    return "6+";
  };
  for (std::size_t a = 0; a < kElementKindCount; ++a) {
    for (std::size_t b = a + 1; b < kElementKindCount; ++b) {
      const auto& sa = quad[a];
      const auto& sb = quad[b];
      if (!sa || !sb) continue;
      const std::string pair = std::string(kSlot[a]) + std::string(kSlot[b]);
      const bool before = sa->end < sb->start;
      const std::size_t gap = before ? sb->start - sa->end - 1
                                     : (sb->end < sa->start ? sa->start - sb->end - 1 : 0);
      const std::string order = before ? "<" : ">";
      fb.add("ord" + pair, order);
      fb.add("gap" + pair, order + bucket(gap));
    }
  }
  std::string pattern;
  for (std::size_t k = 0; k < kElementKindCount; ++k) pattern += quad[k] ? kSlot[k] : "_";
  fb.add("pattern", pattern);
  if (pred) {
    const std::string pw = detail::fold_case(tokens[pred->end].text);
    fb.add("pattern+Plast", pattern + " " + pw);
  }
  fb.add("bias");
  return fb.finish();
}

}  // namespace comom

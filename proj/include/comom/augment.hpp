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

// Dictionary-substitution augmentation.
//
// Element phrases are collected per slot from gold data (predicates bucketed
// by the label of the comparison they express), optionally extended with
// external wordlists, and then substituted into randomly chosen comparative
// sentences. A synthetic comparison takes the label of the predicate bucket
// its new predicate was drawn from.

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "comom/core.hpp"
#include "comom/error.hpp"
#include "comom/ingest.hpp"
#include "comom/random.hpp"
#include "json.hpp"

namespace comom {

struct ElementDictionaries {
  std::vector<std::string> subjects;
  std::vector<std::string> objects;
  std::vector<std::string> aspects;
  std::map<ComparisonLabel, std::vector<std::string>> predicates;
  // Predicates found under more than one label, and similar oddities worth a
  // human look. Not part of equality.
  std::vector<std::string> warnings;

  const std::vector<std::string>& slot(ElementKind kind) const {
    switch (kind) {
      case ElementKind::kSubject: return subjects;
      case ElementKind::kObject: return objects;
      case ElementKind::kAspect: return aspects;
      case ElementKind::kPredicate: break;
    }
    fail(ErrorCode::kInvalidArgument, "predicate phrases are bucketed by label");
  }
  std::vector<std::string>& slot(ElementKind kind) {
    return const_cast<std::vector<std::string>&>(std::as_const(*this).slot(kind));
  }

  const std::vector<std::string>& predicates_for(ComparisonLabel label) const {
    static const std::vector<std::string> kEmpty;
    auto it = predicates.find(label);
    return it == predicates.end() ? kEmpty : it->second;
  }

  std::size_t predicate_count() const {
    std::size_t n = 0;
    for (const auto& [label, list] : predicates) n += list.size();
    return n;
  }

  bool operator==(const ElementDictionaries& other) const {
    return subjects == other.subjects && objects == other.objects && aspects == other.aspects &&
           predicates == other.predicates;
  }
};

namespace detail {

inline bool add_phrase(std::vector<std::string>& list, std::string_view raw) {
  std::string phrase = normalize_text(raw).clean;
  if (phrase.empty()) return false;
  if (std::find(list.begin(), list.end(), phrase) != list.end()) return false;
  list.push_back(std::move(phrase));
  return true;
}

inline void note_cross_label_predicates(ElementDictionaries& dicts) {
  std::map<std::string, std::vector<ComparisonLabel>> owners;
  for (const auto& [label, list] : dicts.predicates) {
    for (const auto& phrase : list) owners[phrase].push_back(label);
  }
  dicts.warnings.erase(std::remove_if(dicts.warnings.begin(), dicts.warnings.end(),
                                      [](const std::string& w) {
                                        return w.rfind("predicate '", 0) == 0;
                                      }),
                       dicts.warnings.end());
  for (const auto& [phrase, labels] : owners) {
    if (labels.size() < 2) continue;
    std::string names;
    for (ComparisonLabel label : labels) {
      if (!names.empty()) names += ", ";
      names += label_name(label);
    }
    dicts.warnings.push_back("predicate '" + phrase + "' appears under several labels: " + names);
  }
}

}  // namespace detail

// Collects every gold element phrase into its slot list in first-seen order.
inline ElementDictionaries build_dictionaries(const Dataset& dataset) {
  ElementDictionaries dicts;
  bool any_comparative = false;
  for (const Sentence& s : dataset.sentences) {
    if (!s.is_comparative()) continue;
    any_comparative = true;
    for (const Quintuple& q : s.quintuples) {
      for (ElementKind kind : kElementKinds) {
        const auto& span = q.slot(kind);
        if (!span) continue;
        const std::string phrase = s.span_text(*span);
        if (kind == ElementKind::kPredicate) {
          detail::add_phrase(dicts.predicates[q.label], phrase);
        } else {
          detail::add_phrase(dicts.slot(kind), phrase);
        }
      }
    }
  }
  if (!any_comparative) {
    fail(ErrorCode::kEmptyCorpus, "no comparative sentences to build dictionaries from");
  }
  detail::note_cross_label_predicates(dicts);
  return dicts;
}

// Adds normalized, deduplicated entries to one slot. Predicate entries need the
// label of the bucket they belong to.
inline ElementDictionaries merge_wordlist(ElementDictionaries dicts, ElementKind slot,
                                          const std::vector<std::string>& entries,
                                          std::optional<ComparisonLabel> label = std::nullopt) {
  if (slot == ElementKind::kPredicate) {
    if (!label) fail(ErrorCode::kMissingLabel, "predicate wordlists must name their label");
    auto& bucket = dicts.predicates[*label];
    for (const auto& e : entries) detail::add_phrase(bucket, e);
    detail::note_cross_label_predicates(dicts);
  } else {
    if (label) {
      fail(ErrorCode::kInvalidArgument,
           "only predicate wordlists carry a label (got one for " +
               std::string(element_kind_name(slot)) + ")");
    }
    for (const auto& e : entries) detail::add_phrase(dicts.slot(slot), e);
  }
  return dicts;
}

// One phrase per line; blank lines and lines starting with '#' are skipped.
inline std::vector<std::string> read_wordlist(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open wordlist '" + path.string() + "'");
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    entries.push_back(line);
  }
  return entries;
}

// Wordlist directory layout: subjects.txt, objects.txt, aspects.txt and
// predicates.<LABEL>.txt (e.g. predicates.COM+.txt). Missing files are skipped.
inline ElementDictionaries merge_wordlist_dir(ElementDictionaries dicts,
                                              const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    fail(ErrorCode::kIoError, "wordlist directory '" + dir.string() + "' not found");
  }
  constexpr std::array<std::pair<ElementKind, const char*>, 3> kFiles = {{
      {ElementKind::kSubject, "subjects.txt"},
      {ElementKind::kObject, "objects.txt"},
      {ElementKind::kAspect, "aspects.txt"},
  }};
  for (const auto& [kind, name] : kFiles) {
    const auto path = dir / name;
    if (std::filesystem::exists(path)) dicts = merge_wordlist(std::move(dicts), kind, read_wordlist(path));
  }
  for (ComparisonLabel label : kComparisonLabels) {
    const auto path = dir / ("predicates." + std::string(label_name(label)) + ".txt");
    if (std::filesystem::exists(path)) {
      dicts = merge_wordlist(std::move(dicts), ElementKind::kPredicate, read_wordlist(path), label);
    }
  }
  return dicts;
}

// ---------------------------------------------------------------------------
// Substitution.

namespace detail {

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[static_cast<std::size_t>(uniform_index(rng, items.size()))];
}

// Chooses the label bucket for one predicate substitution, or nullopt when no
// bucket is acceptable.
using LabelPicker = std::function<std::optional<ComparisonLabel>(Rng&)>;

struct Replacement {
  ElementKind kind;
  TokenSpan span;
  std::vector<std::string> tokens;
  std::optional<ComparisonLabel> label;
};

inline Sentence substitute(const Sentence& tmpl, const ElementDictionaries& dicts, Rng& rng,
                           const LabelPicker& pick_label) {
  if (!tmpl.is_comparative()) {
    fail(ErrorCode::kInvalidArgument, "template '" + tmpl.id + "' is not comparative");
  }
  (void)tags_for_quintuples(tmpl);  // rejects spans of different kinds sharing a token

  // Distinct (kind, span) occurrences in token order; a span shared by
  // several quintuples is substituted once.
  std::vector<Replacement> reps;
  for (const Quintuple& q : tmpl.quintuples) {
    for (ElementKind kind : kElementKinds) {
      const auto& span = q.slot(kind);
      if (!span) continue;
      const bool seen = std::any_of(reps.begin(), reps.end(), [&](const Replacement& r) {
        return r.kind == kind && r.span == *span;
      });
      if (!seen) reps.push_back(Replacement{kind, *span, {}, std::nullopt});
    }
  }
  std::sort(reps.begin(), reps.end(), [](const Replacement& a, const Replacement& b) {
    return std::pair(a.span.start, a.span.end) < std::pair(b.span.start, b.span.end);
  });
  for (std::size_t i = 1; i < reps.size(); ++i) {
    if (reps[i].span.overlaps(reps[i - 1].span)) {
      fail(ErrorCode::kOverlappingElements,
           "template '" + tmpl.id + "' has partially overlapping " +
               std::string(element_kind_name(reps[i].kind)) + " spans");
    }
  }

  // Draw in token order so the random stream is consumed deterministically.
  for (Replacement& r : reps) {
    std::string phrase;
    if (r.kind == ElementKind::kPredicate) {
      auto label = pick_label(rng);
      if (!label) {
        fail(ErrorCode::kSlotUnavailable,
             "no usable predicate bucket for template '" + tmpl.id + "'");
      }
      phrase = pick(dicts.predicates_for(*label), rng);
      r.label = label;
    } else {
      const auto& list = dicts.slot(r.kind);
      if (list.empty()) {
        fail(ErrorCode::kSlotUnavailable,
             "no " + std::string(element_kind_name(r.kind)) + " phrases available");
      }
      phrase = pick(list, rng);
    }
    for (const Token& t : tokenize(phrase)) r.tokens.push_back(t.text);
  }

  // Rebuild the token sequence and record where each replaced span now lives.
  std::vector<std::string> words;
  std::vector<TokenSpan> new_spans(reps.size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (next < reps.size() && reps[next].span.start == i) {
      const Replacement& r = reps[next];
      new_spans[next] = TokenSpan{words.size(), words.size() + r.tokens.size() - 1};
      words.insert(words.end(), r.tokens.begin(), r.tokens.end());
      i = r.span.end + 1;
      ++next;
    } else {
      words.push_back(tmpl.tokens[i].text);
      ++i;
    }
  }
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text.push_back(' ');
    text += words[i];
  }

  std::vector<Quintuple> quintuples;
  for (const Quintuple& q : tmpl.quintuples) {
    Quintuple out;
    out.label = q.label;
    for (ElementKind kind : kElementKinds) {
      const auto& span = q.slot(kind);
      if (!span) continue;
      for (std::size_t r = 0; r < reps.size(); ++r) {
        if (reps[r].kind == kind && reps[r].span == *span) {
          out.slot(kind) = new_spans[r];
          if (kind == ElementKind::kPredicate) out.label = *reps[r].label;
          break;
        }
      }
    }
    quintuples.push_back(out);
  }
  return make_sentence(tmpl.id, std::move(text), std::move(quintuples));
}

}  // namespace detail

// Replaces every element of a comparative template with a phrase drawn
// uniformly from its slot list. Each predicate first picks a label uniformly
// among the non-empty buckets, and its comparison inherits that label.
inline Sentence synthesize_sentence(const Sentence& tmpl, const ElementDictionaries& dicts,
                                    Rng& rng) {
  std::vector<ComparisonLabel> usable;
  for (ComparisonLabel label : kComparisonLabels) {
    if (!dicts.predicates_for(label).empty()) usable.push_back(label);
  }
  return detail::substitute(tmpl, dicts, rng, [&](Rng& r) -> std::optional<ComparisonLabel> {
    if (usable.empty()) return std::nullopt;
    return detail::pick(usable, r);
  });
}

// ---------------------------------------------------------------------------
// Generation to per-label targets.

struct AugmentSpec {
  std::map<ComparisonLabel, std::size_t> targets;
  std::uint64_t seed = 0;
  // Consecutive rejected candidates tolerated before giving up.
  std::size_t max_attempts = 10000;

  std::size_t target(ComparisonLabel label) const {
    auto it = targets.find(label);
    return it == targets.end() ? 0 : it->second;
  }
  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& [label, count] : targets) n += count;
    return n;
  }

  void validate() const {
    if (total() == 0) fail(ErrorCode::kInvalidArgument, "augment spec targets no label");
    if (max_attempts == 0) fail(ErrorCode::kInvalidArgument, "max_attempts must be positive");
  }

  // Synthetic targets that bring the source's own quintuple counts up to the
  // given combined per-label totals.
  static AugmentSpec for_combined_counts(const Dataset& source,
                                         const std::map<ComparisonLabel, std::size_t>& combined,
                                         std::uint64_t seed, std::size_t max_attempts = 10000) {
    const StatsReport stats = dataset_stats(source);
    AugmentSpec spec;
    spec.seed = seed;
    spec.max_attempts = max_attempts;
    for (const auto& [label, want] : combined) {
      const std::size_t have = stats.label_count(label);
      if (have > want) {
        fail(ErrorCode::kTargetUnreachable,
             "source already holds " + std::to_string(have) + " " +
                 std::string(label_name(label)) + " quintuples, above the combined target " +
                 std::to_string(want));
      }
      spec.targets[label] = want - have;
    }
    return spec;
  }
};

// Combined (original + synthetic) label counts of the two published dataset
// versions.
inline std::map<ComparisonLabel, std::size_t> version2_label_counts() {
  using L = ComparisonLabel;
  return {{L::kDif, 410},  {L::kEql, 1788},     {L::kSupPlus, 334},  {L::kSupMinus, 288},
          {L::kSup, 308},  {L::kComPlus, 2980}, {L::kComMinus, 854}, {L::kCom, 346}};
}

inline std::map<ComparisonLabel, std::size_t> version3_label_counts() {
  using L = ComparisonLabel;
  return {{L::kDif, 536}, {L::kEql, 557},     {L::kSupPlus, 597},  {L::kSupMinus, 610},
          {L::kSup, 545}, {L::kComPlus, 770}, {L::kComMinus, 597}, {L::kCom, 638}};
}

// JSON form: {"targets": {"COM+": 12, ...}, "seed": 7, "max_attempts": 10000,
// "basis": "synthetic" | "combined"}. With basis "combined" the targets are
// totals over source + synthetic and `source` is required.
inline AugmentSpec augment_spec_from_json(const nlohmann::json& j, const Dataset* source = nullptr) {
  if (!j.is_object() || !j.contains("targets") || !j["targets"].is_object()) {
    fail(ErrorCode::kInvalidArgument, "augment spec needs a 'targets' object");
  }
  std::map<ComparisonLabel, std::size_t> targets;
  for (const auto& [name, count] : j["targets"].items()) {
    if (!count.is_number_unsigned()) {
      fail(ErrorCode::kInvalidArgument, "target for '" + name + "' must be a non-negative integer");
    }
    targets[parse_label(name)] = count.get<std::size_t>();
  }
  const std::uint64_t seed = j.value("seed", std::uint64_t{0});
  const std::size_t max_attempts = j.value("max_attempts", std::size_t{10000});
  const std::string basis = j.value("basis", std::string("synthetic"));
  AugmentSpec spec;
  if (basis == "combined") {
    if (!source) fail(ErrorCode::kInvalidArgument, "combined targets need the source dataset");
    spec = AugmentSpec::for_combined_counts(*source, targets, seed, max_attempts);
  } else if (basis == "synthetic") {
    spec.targets = std::move(targets);
    spec.seed = seed;
    spec.max_attempts = max_attempts;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown basis '" + basis + "'");
  }
  spec.validate();
  return spec;
}

inline nlohmann::ordered_json augment_spec_to_json(const AugmentSpec& spec) {
  nlohmann::ordered_json j;
  for (ComparisonLabel label : kComparisonLabels) {
    if (spec.targets.count(label)) j["targets"][std::string(label_name(label))] = spec.target(label);
  }
  j["seed"] = spec.seed;
  j["max_attempts"] = spec.max_attempts;
  j["basis"] = "synthetic";
  return j;
}

// Produces synthetic sentences whose quintuple label counts equal the spec's
// targets exactly. Templates are the source's comparative sentences in which
// every comparison has a predicate (so every synthetic label is decided by a
// dictionary bucket); each draw picks one uniformly. Predicate buckets are
// only drawn for labels still below target. A candidate that would overshoot
// any target is discarded whole.
inline Dataset generate_dataset(const Dataset& source, const ElementDictionaries& dicts,
                                const AugmentSpec& spec) {
  spec.validate();
  std::vector<const Sentence*> templates;
  for (const Sentence& s : source.sentences) {
    if (!s.is_comparative()) continue;
    const bool all_predicates = std::all_of(s.quintuples.begin(), s.quintuples.end(),
                                            [](const Quintuple& q) { return q.predicate().has_value(); });
    if (!all_predicates) continue;
    try {
      (void)tags_for_quintuples(s);
    } catch (const Error&) {
      continue;
    }
    templates.push_back(&s);
  }
  if (templates.empty()) {
    fail(ErrorCode::kEmptyCorpus, "source has no usable comparative template");
  }
  for (const auto& [label, count] : spec.targets) {
    if (count > 0 && dicts.predicates_for(label).empty()) {
      fail(ErrorCode::kTargetUnreachable,
           "no predicate bucket for " + std::string(label_name(label)));
    }
  }

  std::set<std::string> used_ids;
  for (const Sentence& s : source.sentences) used_ids.insert(s.id);

  Rng rng(spec.seed);
  std::array<std::size_t, kLabelCount> remaining{};
  for (ComparisonLabel label : kComparisonLabels) remaining[index_of(label)] = spec.target(label);
  auto outstanding = [&] {
    std::size_t n = 0;
    for (std::size_t r : remaining) n += r;
    return n;
  };

  Dataset out;
  out.provenance.version = "synthetic";
  out.provenance.seed = spec.seed;
  out.provenance.note = "dictionary substitution over " + std::to_string(templates.size()) + " templates";

  std::size_t failures = 0;
  std::size_t serial = 0;
  while (outstanding() > 0) {
    if (failures >= spec.max_attempts) {
      std::string left;
      for (ComparisonLabel label : kComparisonLabels) {
        if (remaining[index_of(label)] == 0) continue;
        if (!left.empty()) left += ", ";
        left += std::string(label_name(label)) + "=" + std::to_string(remaining[index_of(label)]);
      }
      fail(ErrorCode::kTargetUnreachable,
           std::to_string(failures) + " consecutive rejected candidates; still missing " + left);
    }
    const Sentence& tmpl = *detail::pick(templates, rng);

    // Per-candidate budget so one template cannot draw past a target.
    std::array<std::size_t, kLabelCount> budget = remaining;
    auto picker = [&](Rng& r) -> std::optional<ComparisonLabel> {
      std::vector<ComparisonLabel> open;
      for (ComparisonLabel label : kComparisonLabels) {
        if (budget[index_of(label)] > 0) open.push_back(label);
      }
      if (open.empty()) return std::nullopt;
      const ComparisonLabel label = detail::pick(open, r);
      --budget[index_of(label)];
      return label;
    };
    Sentence candidate;
    try {
      candidate = detail::substitute(tmpl, dicts, rng, picker);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kSlotUnavailable) throw;
      ++failures;
      continue;
    }
    std::array<std::size_t, kLabelCount> drawn{};
    for (const Quintuple& q : candidate.quintuples) ++drawn[index_of(q.label)];
    bool overshoot = false;
    for (std::size_t i = 0; i < kLabelCount; ++i) overshoot = overshoot || drawn[i] > remaining[i];
    if (overshoot) {
      ++failures;
      continue;
    }
    for (std::size_t i = 0; i < kLabelCount; ++i) remaining[i] -= drawn[i];
    failures = 0;
    std::string id;
    do {
      id = tmpl.id + "#aug" + std::to_string(++serial);
    } while (used_ids.count(id));
    used_ids.insert(id);
    candidate.id = std::move(id);
    out.sentences.push_back(std::move(candidate));
  }
  return out;
}

// Original sentences followed by synthetic ones.
inline Dataset combine_datasets(const Dataset& original, const Dataset& synthetic,
                                std::string version) {
  Dataset out;
  out.sentences = original.sentences;
  out.sentences.insert(out.sentences.end(), synthetic.sentences.begin(), synthetic.sentences.end());
  out.provenance.version = std::move(version);
  out.provenance.seed = synthetic.provenance.seed;
  out.provenance.note = std::to_string(original.size()) + " original + " +
                        std::to_string(synthetic.size()) + " synthetic sentences";
  validate_dataset(out);
  return out;
}

}  // namespace comom

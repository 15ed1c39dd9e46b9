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

// Exact-match quintuple scoring, macro-averaged over comparison labels, plus
// diagnostics for the first two pipeline stages.

#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "comom/core.hpp"
#include "comom/error.hpp"
#include "comom/pipeline.hpp"
#include "comom/spans.hpp"
#include "json.hpp"

namespace comom {

// Which labels enter the macro mean.
enum class Averaging {
  kSkipAbsent,  // labels present in gold or predictions (default)
  kAllLabels,   // all eight; a label absent from both sides scores 0
};

inline std::string_view averaging_name(Averaging a) {
  return a == Averaging::kSkipAbsent ? "skip-absent" : "all-labels";
}

inline Averaging parse_averaging(std::string_view text) {
  if (text == "skip-absent") return Averaging::kSkipAbsent;
  if (text == "all-labels") return Averaging::kAllLabels;
  fail(ErrorCode::kInvalidArgument, "unknown averaging mode '" + std::string(text) + "'");
}

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  bool operator==(const Prf&) const = default;
};

// 0/0 is taken as 0.
inline Prf make_prf(std::size_t matched, std::size_t predicted, std::size_t gold) {
  Prf r;
  r.precision = predicted ? static_cast<double>(matched) / static_cast<double>(predicted) : 0.0;
  r.recall = gold ? static_cast<double>(matched) / static_cast<double>(gold) : 0.0;
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0 ? 2 * r.precision * r.recall / sum : 0.0;
  return r;
}

struct LabelScore {
  ComparisonLabel label = ComparisonLabel::kDif;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;
  Prf score;
  bool included = false;  // entered the macro mean

  bool operator==(const LabelScore&) const = default;
};

struct Stage1Metrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double accuracy = 0;
  Prf score;

  bool operator==(const Stage1Metrics&) const = default;
};

struct SpanMetrics {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;
  Prf score;

  bool operator==(const SpanMetrics&) const = default;
};

struct StageMetrics {
  Stage1Metrics stage1;
  std::array<SpanMetrics, kElementKindCount> stage2;

  bool operator==(const StageMetrics&) const = default;
};

struct EvalReport {
  Averaging averaging = Averaging::kSkipAbsent;
  std::size_t sentences = 0;
  std::array<LabelScore, kLabelCount> labels;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t matched = 0;
  Prf macro;
  std::optional<StageMetrics> stages;

  const LabelScore& of(ComparisonLabel l) const { return labels[index_of(l)]; }

  bool operator==(const EvalReport&) const = default;
};

// Greedy one-to-one matching; returns (prediction index, gold index) pairs.
// Matching requires equality on all five fields, so greedy is optimal.
inline std::vector<std::pair<std::size_t, std::size_t>> match_quintuples(
    std::span<const Quintuple> gold, std::span<const Quintuple> pred) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::vector<bool> used(gold.size(), false);
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gold.size(); ++g) {
      if (!used[g] && gold[g] == pred[p]) {
        used[g] = true;
        out.emplace_back(p, g);
        break;
      }
    }
  }
  return out;
}

namespace detail {

// Pairs every gold sentence with the prediction of the same id.
template <typename T, typename IdOf>
std::vector<const T*> align_by_id(const Dataset& gold, std::span<const T> other, IdOf id_of,
                                  std::string_view what) {
  std::unordered_map<std::string, const T*> by_id;
  for (const T& x : other) {
    if (!by_id.emplace(id_of(x), &x).second) {
      fail(ErrorCode::kIdMismatch, std::string(what) + " repeats sentence id '" + id_of(x) + "'");
    }
  }
  if (by_id.size() != gold.size()) {
    fail(ErrorCode::kIdMismatch, std::string(what) + " has " + std::to_string(by_id.size()) +
                                     " sentences, gold has " + std::to_string(gold.size()));
  }
  std::vector<const T*> out;
  std::unordered_map<std::string, bool> seen;
  for (const Sentence& g : gold.sentences) {
    if (!seen.emplace(g.id, true).second) {
      fail(ErrorCode::kIdMismatch, "gold repeats sentence id '" + g.id + "'");
    }
    auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      fail(ErrorCode::kIdMismatch, std::string(what) + " lacks sentence '" + g.id + "'");
    }
    out.push_back(it->second);
  }
  return out;
}

}  // namespace detail

inline EvalReport e_t5_macro(const Dataset& gold, const Dataset& pred,
                             Averaging averaging = Averaging::kSkipAbsent) {
  const auto aligned = detail::align_by_id(
      gold, std::span<const Sentence>(pred.sentences), [](const Sentence& s) { return s.id; },
      "prediction set");
  EvalReport r;
  r.averaging = averaging;
  r.sentences = gold.size();
  for (std::size_t i = 0; i < kLabelCount; ++i) r.labels[i].label = kComparisonLabels[i];
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold.sentences[i].quintuples;
    const auto& p = aligned[i]->quintuples;
    for (const Quintuple& q : g) ++r.labels[index_of(q.label)].gold;
    for (const Quintuple& q : p) ++r.labels[index_of(q.label)].predicted;
    for (const auto& [pi, gi] : match_quintuples(g, p)) ++r.labels[index_of(p[pi].label)].matched;
  }
  std::size_t included = 0;
  for (LabelScore& l : r.labels) {
    l.score = make_prf(l.matched, l.predicted, l.gold);
    l.included = averaging == Averaging::kAllLabels || l.gold > 0 || l.predicted > 0;
    r.gold += l.gold;
    r.predicted += l.predicted;
    r.matched += l.matched;
    if (!l.included) continue;
    ++included;
    r.macro.precision += l.score.precision;
    r.macro.recall += l.score.recall;
    r.macro.f1 += l.score.f1;
  }
  if (included > 0) {
    const double n = static_cast<double>(included);
    r.macro.precision /= n;
    r.macro.recall /= n;
    r.macro.f1 /= n;
  }
  return r;
}

// Stage 1 as binary classification of the gate decision, stage 2 as exact
// span match per element kind against the union of gold spans.
inline StageMetrics stage_metrics(const Dataset& gold, std::span<const SentenceTrace> trace) {
  const auto aligned = detail::align_by_id(
      gold, trace, [](const SentenceTrace& t) { return t.id; }, "trace");
  StageMetrics m;
  auto& s1 = m.stage1;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Sentence& g = gold.sentences[i];
    const SentenceTrace& t = *aligned[i];
    const bool truth = g.is_comparative();
    const bool guess = t.gated_comparative;
    s1.tp += truth && guess;
    s1.fp += !truth && guess;
    s1.fn += truth && !guess;
    s1.tn += !truth && !guess;
    const ElementSets gs = element_sets_of(g);
    for (ElementKind kind : kElementKinds) {
      auto& sm = m.stage2[index_of(kind)];
      const auto& gold_spans = gs.of(kind);
      const auto& pred_spans = t.elements.of(kind);
      sm.gold += gold_spans.size();
      sm.predicted += pred_spans.size();
      for (const TokenSpan& p : pred_spans) {
        sm.matched += std::find(gold_spans.begin(), gold_spans.end(), p) != gold_spans.end();
      }
    }
  }
  const std::size_t total = s1.tp + s1.fp + s1.fn + s1.tn;
  s1.accuracy = total ? static_cast<double>(s1.tp + s1.tn) / static_cast<double>(total) : 0.0;
  s1.score = make_prf(s1.tp, s1.tp + s1.fp, s1.tp + s1.fn);
  for (auto& sm : m.stage2) sm.score = make_prf(sm.matched, sm.predicted, sm.gold);
  return m;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace detail {

inline nlohmann::ordered_json prf_json(const Prf& p) {
  nlohmann::ordered_json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  return j;
}

inline Prf prf_from(const nlohmann::json& j) {
  return Prf{j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

}  // namespace detail

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = "E-T5-MACRO";
  j["averaging"] = std::string(averaging_name(r.averaging));
  j["sentences"] = r.sentences;
  j["macro_f1"] = r.macro.f1;
  j["macro_precision"] = r.macro.precision;
  j["macro_recall"] = r.macro.recall;
  j["gold"] = r.gold;
  j["predicted"] = r.predicted;
  j["matched"] = r.matched;
  nlohmann::ordered_json labels = nlohmann::ordered_json::array();
  for (const LabelScore& l : r.labels) {
    nlohmann::ordered_json lj;
    lj["label"] = std::string(label_name(l.label));
    lj["gold"] = l.gold;
    lj["predicted"] = l.predicted;
    lj["matched"] = l.matched;
    lj["precision"] = l.score.precision;
    lj["recall"] = l.score.recall;
    lj["f1"] = l.score.f1;
    lj["included"] = l.included;
    labels.push_back(std::move(lj));
  }
  j["labels"] = std::move(labels);
  if (r.stages) {
    const auto& s1 = r.stages->stage1;
    nlohmann::ordered_json sj;
    sj["tp"] = s1.tp;
    sj["fp"] = s1.fp;
    sj["fn"] = s1.fn;
    sj["tn"] = s1.tn;
    sj["accuracy"] = s1.accuracy;
    sj["precision"] = s1.score.precision;
    sj["recall"] = s1.score.recall;
    sj["f1"] = s1.score.f1;
    j["stage1"] = std::move(sj);
    nlohmann::ordered_json s2;
    for (ElementKind kind : kElementKinds) {
      const auto& sm = r.stages->stage2[index_of(kind)];
      nlohmann::ordered_json kj;
      kj["gold"] = sm.gold;
      kj["predicted"] = sm.predicted;
      kj["matched"] = sm.matched;
      kj["precision"] = sm.score.precision;
      kj["recall"] = sm.score.recall;
      kj["f1"] = sm.score.f1;
      s2[std::string(element_kind_name(kind))] = std::move(kj);
    }
    j["stage2"] = std::move(s2);
  }
  return j;
}

inline EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.averaging = parse_averaging(j.at("averaging").get<std::string>());
    r.sentences = j.at("sentences").get<std::size_t>();
    r.macro = Prf{j.at("macro_precision").get<double>(), j.at("macro_recall").get<double>(),
                  j.at("macro_f1").get<double>()};
    r.gold = j.at("gold").get<std::size_t>();
    r.predicted = j.at("predicted").get<std::size_t>();
    r.matched = j.at("matched").get<std::size_t>();
    const auto& labels = j.at("labels");
    if (labels.size() != kLabelCount) fail(ErrorCode::kParseError, "report must list all eight labels");
    for (const auto& lj : labels) {
      LabelScore l;
      l.label = parse_label(lj.at("label").get<std::string>());
      l.gold = lj.at("gold").get<std::size_t>();
      l.predicted = lj.at("predicted").get<std::size_t>();
      l.matched = lj.at("matched").get<std::size_t>();
      l.score = detail::prf_from(lj);
      l.included = lj.at("included").get<bool>();
      r.labels[index_of(l.label)] = l;
    }
    if (j.contains("stage1")) {
      StageMetrics s;
      const auto& sj = j["stage1"];
      s.stage1.tp = sj.at("tp").get<std::size_t>();
      s.stage1.fp = sj.at("fp").get<std::size_t>();
      s.stage1.fn = sj.at("fn").get<std::size_t>();
      s.stage1.tn = sj.at("tn").get<std::size_t>();
      s.stage1.accuracy = sj.at("accuracy").get<double>();
      s.stage1.score = detail::prf_from(sj);
      for (ElementKind kind : kElementKinds) {
        const auto& kj = j.at("stage2").at(std::string(element_kind_name(kind)));
        auto& sm = s.stage2[index_of(kind)];
        sm.gold = kj.at("gold").get<std::size_t>();
        sm.predicted = kj.at("predicted").get<std::size_t>();
        sm.matched = kj.at("matched").get<std::size_t>();
        sm.score = detail::prf_from(kj);
      }
      r.stages = s;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParseError, std::string("eval report: ") + e.what());
  }
  return r;
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  const std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace detail

// Aligned table: per-label rows, then the macro line in the column order
// MACRO-F1, MACRO-P, MACRO-R.
inline std::string eval_report_to_text(const EvalReport& r) {
  using detail::fixed4;
  using detail::pad;
  std::ostringstream out;
  out << pad("LABEL", 6, true) << pad("GOLD", 7) << pad("PRED", 7) << pad("MATCH", 7)
      << pad("P", 9) << pad("R", 9) << pad("F1", 9) << "\n";
  for (const LabelScore& l : r.labels) {
    out << pad(std::string(label_name(l.label)), 6, true) << pad(std::to_string(l.gold), 7)
        << pad(std::to_string(l.predicted), 7) << pad(std::to_string(l.matched), 7)
        << pad(fixed4(l.score.precision), 9) << pad(fixed4(l.score.recall), 9)
        << pad(fixed4(l.score.f1), 9) << (l.included ? "" : "  (not averaged)") << "\n";
  }
  out << "\n" << pad("MACRO-F1", 10) << pad("MACRO-P", 10) << pad("MACRO-R", 10) << "\n"
      << pad(fixed4(r.macro.f1), 10) << pad(fixed4(r.macro.precision), 10)
      << pad(fixed4(r.macro.recall), 10) << "\n";
  if (r.stages) {
    const auto& s1 = r.stages->stage1;
    out << "\nstage 1: accuracy " << fixed4(s1.accuracy) << "  P " << fixed4(s1.score.precision)
        << "  R " << fixed4(s1.score.recall) << "  F1 " << fixed4(s1.score.f1) << "\n";
    for (ElementKind kind : kElementKinds) {
      const auto& sm = r.stages->stage2[index_of(kind)];
      out << "stage 2 " << pad(std::string(element_kind_name(kind)), 10, true) << "P "
          << fixed4(sm.score.precision) << "  R " << fixed4(sm.score.recall) << "  F1 "
          << fixed4(sm.score.f1) << "\n";
    }
  }
  return out.str();
}

}  // namespace comom

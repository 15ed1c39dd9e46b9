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

// Reading, cleaning, linting and summarizing annotated review datasets.
//
// Raw review text carries non-breaking and zero-width spaces that shift word
// positions. Normalization rewrites the text and produces an IndexMap so that
// annotations made against the raw text can be carried over to the cleaned
// tokens.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "comom/core.hpp"
#include "comom/error.hpp"
#include "comom/utf8.hpp"
#include "json.hpp"

namespace comom {

// ---------------------------------------------------------------------------
// Normalization.

// Monotone partial map from raw code-point indices to normalized ones.
// Characters removed by normalization have no image.
class IndexMap {
 public:
  IndexMap() = default;
  IndexMap(std::vector<std::optional<std::size_t>> raw_to_clean, std::size_t clean_length)
      : raw_to_clean_(std::move(raw_to_clean)), clean_length_(clean_length) {}

  std::size_t raw_length() const { return raw_to_clean_.size(); }
  std::size_t clean_length() const { return clean_length_; }

  std::optional<std::size_t> map(std::size_t raw_index) const {
    if (raw_index >= raw_to_clean_.size()) return std::nullopt;
    return raw_to_clean_[raw_index];
  }

  // Maps the half-open raw interval [begin, end) to the half-open clean
  // interval spanned by its surviving characters. Empty when nothing survives.
  std::optional<std::pair<std::size_t, std::size_t>> map_range(std::size_t begin,
                                                               std::size_t end) const {
    std::optional<std::size_t> first;
    std::optional<std::size_t> last;
    for (std::size_t i = begin; i < end && i < raw_to_clean_.size(); ++i) {
      if (!raw_to_clean_[i]) continue;
      if (!first) first = raw_to_clean_[i];
      last = raw_to_clean_[i];
    }
    if (!first) return std::nullopt;
    return std::make_pair(*first, *last + 1);
  }

  bool is_identity() const {
    if (raw_to_clean_.size() != clean_length_) return false;
    for (std::size_t i = 0; i < raw_to_clean_.size(); ++i) {
      if (raw_to_clean_[i] != i) return false;
    }
    return true;
  }

  const std::vector<std::optional<std::size_t>>& entries() const { return raw_to_clean_; }

 private:
  std::vector<std::optional<std::size_t>> raw_to_clean_;
  std::size_t clean_length_ = 0;
};

inline constexpr bool is_zero_width(char32_t cp) {
  return cp == 0x200B || cp == 0xFEFF || cp == 0x200C || cp == 0x200D;
}

struct NormalizedText {
  std::string clean;
  IndexMap map;
};

// Deletes zero-width characters, turns every whitespace character (including
// U+00A0) into U+0020, collapses whitespace runs and trims both ends. The first
// character of an interior whitespace run maps to the surviving space.
inline NormalizedText normalize_text(std::string_view raw) {
  const std::u32string cps = utf8::decode(raw);
  std::vector<std::optional<std::size_t>> map(cps.size());
  std::u32string out;
  out.reserve(cps.size());
  std::optional<std::size_t> pending_space;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_zero_width(cp)) continue;
    if (is_whitespace(cp)) {
      if (!pending_space) pending_space = i;
      continue;
    }
    if (pending_space && !out.empty()) {
      map[*pending_space] = out.size();
      out.push_back(U' ');
    }
    pending_space.reset();
    map[i] = out.size();
    out.push_back(cp);
  }
  const std::size_t clean_length = out.size();
  return NormalizedText{utf8::encode(out), IndexMap(std::move(map), clean_length)};
}

// ---------------------------------------------------------------------------
// Import / export.

enum class DatasetFormat { kCanonicalJsonl, kVlspRaw };

inline DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "canonical-jsonl" || name == "jsonl") return DatasetFormat::kCanonicalJsonl;
  if (name == "vlsp-raw" || name == "vlsp") return DatasetFormat::kVlspRaw;
  fail(ErrorCode::kInvalidArgument, "unknown dataset format '" + std::string(name) + "'");
}

struct ImportIssue {
  std::size_t line = 0;
  ErrorCode code = ErrorCode::kParseError;
  std::string message;
  std::string record;
};

struct ImportResult {
  Dataset dataset;
  std::vector<ImportIssue> issues;
  std::vector<std::string> warnings;

  bool ok() const { return issues.empty(); }
};

namespace detail {

// Raw quintuple whose spans index the whitespace tokens of the raw text.
struct RawQuintuple {
  ElementSlots elements;
  ComparisonLabel label = ComparisonLabel::kDif;
};

struct RecordError {
  ErrorCode code;
  std::string message;
};

// Normalizes one record and carries its spans over to the cleaned tokens.
// Returns the error instead of throwing so the caller can collect it.
inline std::variant<Sentence, RecordError> remap_record(std::string id, std::string_view raw_text,
                                                        const std::vector<RawQuintuple>& raw,
                                                        std::vector<std::string>& warnings) {
  const std::vector<Token> raw_tokens = tokenize(raw_text);
  NormalizedText norm = normalize_text(raw_text);
  Sentence sentence;
  sentence.id = std::move(id);
  sentence.tokens = tokenize(norm.clean);
  sentence.text = std::move(norm.clean);

  // Surviving raw token -> clean token index.
  std::vector<std::optional<std::size_t>> token_map(raw_tokens.size());
  for (std::size_t t = 0; t < raw_tokens.size(); ++t) {
    auto range = norm.map.map_range(raw_tokens[t].begin, raw_tokens[t].end);
    if (!range) continue;
    for (std::size_t c = 0; c < sentence.tokens.size(); ++c) {
      if (sentence.tokens[c].begin <= range->first && range->first < sentence.tokens[c].end) {
        token_map[t] = c;
        break;
      }
    }
  }

  for (const RawQuintuple& rq : raw) {
    if (!any_present(rq.elements)) {
      return RecordError{ErrorCode::kParseError, "quintuple has no element present"};
    }
    Quintuple q;
    q.label = rq.label;
    for (ElementKind kind : kElementKinds) {
      const auto& span = rq.elements[index_of(kind)];
      if (!span) continue;
      if (span->start > span->end || span->end >= raw_tokens.size()) {
        return RecordError{ErrorCode::kParseError,
                           std::string(element_kind_name(kind)) + " span [" +
                               std::to_string(span->start) + "," + std::to_string(span->end) +
                               "] outside a " + std::to_string(raw_tokens.size()) +
                               "-token sentence"};
      }
      std::optional<std::size_t> first;
      std::optional<std::size_t> last;
      for (std::size_t t = span->start; t <= span->end; ++t) {
        if (!token_map[t]) continue;
        if (!first) first = token_map[t];
        last = token_map[t];
      }
      if (!first) {
        return RecordError{ErrorCode::kSpanRemapError,
                           std::string(element_kind_name(kind)) + " span [" +
                               std::to_string(span->start) + "," + std::to_string(span->end) +
                               "] covers only deleted characters"};
      }
      if (!token_map[span->start] || !token_map[span->end]) {
        warnings.push_back("sentence '" + sentence.id + "': " +
                           std::string(element_kind_name(kind)) +
                           " span shrunk after removing deleted characters");
      }
      q.slot(kind) = TokenSpan{*first, *last};
    }
    sentence.quintuples.push_back(q);
  }
  return sentence;
}

inline std::optional<TokenSpan> read_json_span(const nlohmann::json& value,
                                               std::string_view field) {
  if (value.is_null()) return std::nullopt;
  if (!value.is_array() || value.size() != 2 || !value[0].is_number_unsigned() ||
      !value[1].is_number_unsigned()) {
    throw std::invalid_argument("field '" + std::string(field) +
                                "' must be null or [start, end] with non-negative integers");
  }
  return TokenSpan{value[0].get<std::size_t>(), value[1].get<std::size_t>()};
}

inline std::string truncate_record(std::string_view line) {
  constexpr std::size_t kMax = 160;
  if (line.size() <= kMax) return std::string(line);
  return std::string(line.substr(0, kMax)) + "...";
}

inline void read_canonical(std::istream& in, ImportResult& result) {
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto issue = [&](ErrorCode code, std::string message) {
      result.issues.push_back(ImportIssue{line_no, code, std::move(message), truncate_record(line)});
    };
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      issue(ErrorCode::kParseError, std::string("invalid JSON: ") + e.what());
      continue;
    }
    std::string id;
    std::string text;
    std::vector<RawQuintuple> raw;
    try {
      if (!record.is_object()) throw std::invalid_argument("record must be a JSON object");
      if (!record.contains("id") || !record["id"].is_string())
        throw std::invalid_argument("field 'id' must be a string");
      if (!record.contains("text") || !record["text"].is_string())
        throw std::invalid_argument("field 'text' must be a string");
      id = record["id"].get<std::string>();
      text = record["text"].get<std::string>();
      if (record.contains("quintuples")) {
        const auto& qs = record["quintuples"];
        if (!qs.is_array()) throw std::invalid_argument("field 'quintuples' must be an array");
        for (const auto& qj : qs) {
          if (!qj.is_object()) throw std::invalid_argument("quintuple must be an object");
          RawQuintuple rq;
          for (ElementKind kind : kElementKinds) {
            const std::string key(element_kind_name(kind));
            if (qj.contains(key)) rq.elements[index_of(kind)] = read_json_span(qj[key], key);
          }
          if (!qj.contains("label") || !qj["label"].is_string())
            throw std::invalid_argument("quintuple field 'label' must be a string");
          auto label = try_parse_label(qj["label"].get<std::string>());
          if (!label) {
            throw Error(ErrorCode::kUnknownLabel,
                        "unknown comparison label '" + qj["label"].get<std::string>() + "'");
          }
          rq.label = *label;
          raw.push_back(rq);
        }
      }
    } catch (const Error& e) {
      issue(e.code(), e.detail());
      continue;
    } catch (const std::exception& e) {
      issue(ErrorCode::kParseError, e.what());
      continue;
    }
    if (id.empty()) {
      issue(ErrorCode::kParseError, "field 'id' must be non-empty");
      continue;
    }
    if (ids.count(id)) {
      issue(ErrorCode::kParseError, "duplicate sentence id '" + id + "'");
      continue;
    }
    auto remapped = remap_record(id, text, raw, result.warnings);
    if (auto* err = std::get_if<RecordError>(&remapped)) {
      issue(err->code, err->message);
      continue;
    }
    ids.insert(id);
    result.dataset.sentences.push_back(std::move(std::get<Sentence>(remapped)));
  }
}

// Parses one "index&&word" list (1-based word indices) into an inclusive span.
inline std::optional<TokenSpan> read_vlsp_span(const nlohmann::json& value,
                                               std::string_view field, bool& gapped) {
  if (value.is_null()) return std::nullopt;
  if (!value.is_array()) throw std::invalid_argument("field '" + std::string(field) + "' must be a list");
  if (value.empty()) return std::nullopt;
  std::vector<std::size_t> indices;
  for (const auto& entry : value) {
    if (!entry.is_string()) throw std::invalid_argument("entries must be \"index&&word\" strings");
    const std::string s = entry.get<std::string>();
    const auto sep = s.find("&&");
    if (sep == std::string::npos || sep == 0)
      throw std::invalid_argument("entry '" + s + "' is not of the form index&&word");
    std::size_t idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoul(s.substr(0, sep), &used);
      if (used != sep) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("entry '" + s + "' has a non-numeric index");
    }
    if (idx == 0) throw std::invalid_argument("entry '" + s + "' uses index 0 (indices are 1-based)");
    indices.push_back(idx - 1);
  }
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  gapped = gapped || (indices.back() - indices.front() + 1 != indices.size());
  return TokenSpan{indices.front(), indices.back()};
}

// Shared-task style layout: records separated by blank lines; the first line
// is the sentence (optionally "id<TAB>text"), every following line is a JSON
// object whose element fields list 1-based "index&&word" entries.
inline void read_vlsp(std::istream& in, ImportResult& result, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t record_no = 0;
  std::set<std::string> ids;

  struct Pending {
    std::size_t line = 0;
    std::string id;
    std::string text;
    std::vector<RawQuintuple> raw;
    std::optional<ImportIssue> issue;
  };
  std::optional<Pending> pending;

  auto flush = [&]() {
    if (!pending) return;
    Pending p = std::move(*pending);
    pending.reset();
    if (p.issue) {
      result.issues.push_back(*p.issue);
      return;
    }
    if (ids.count(p.id)) {
      result.issues.push_back(
          ImportIssue{p.line, ErrorCode::kParseError, "duplicate sentence id '" + p.id + "'", p.text});
      return;
    }
    auto remapped = remap_record(p.id, p.text, p.raw, result.warnings);
    if (auto* err = std::get_if<RecordError>(&remapped)) {
      result.issues.push_back(ImportIssue{p.line, err->code, err->message, truncate_record(p.text)});
      return;
    }
    ids.insert(p.id);
    result.dataset.sentences.push_back(std::move(std::get<Sentence>(remapped)));
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (!pending) {
      ++record_no;
      pending.emplace();
      pending->line = line_no;
      const auto tab = line.find('\t');
      if (tab != std::string::npos && tab > 0 && line.find(' ') > tab) {
        pending->id = line.substr(0, tab);
        pending->text = line.substr(tab + 1);
      } else {
        pending->id = std::string(source) + "-" + std::to_string(record_no);
        pending->text = line;
      }
      continue;
    }
    if (pending->issue) continue;
    try {
      const auto qj = nlohmann::json::parse(line);
      if (!qj.is_object()) throw std::invalid_argument("quintuple line must be a JSON object");
      RawQuintuple rq;
      bool gapped = false;
      for (ElementKind kind : kElementKinds) {
        const std::string key(element_kind_name(kind));
        if (qj.contains(key)) rq.elements[index_of(kind)] = read_vlsp_span(qj[key], key, gapped);
      }
      if (!qj.contains("label") || !qj["label"].is_string())
        throw std::invalid_argument("quintuple field 'label' must be a string");
      auto label = try_parse_label(qj["label"].get<std::string>());
      if (!label) {
        pending->issue = ImportIssue{line_no, ErrorCode::kUnknownLabel,
                                     "unknown comparison label '" + qj["label"].get<std::string>() + "'",
                                     truncate_record(line)};
        continue;
      }
      rq.label = *label;
      if (gapped) {
        result.warnings.push_back("sentence '" + pending->id +
                                  "': non-contiguous element indices widened to one span");
      }
      pending->raw.push_back(rq);
    } catch (const std::exception& e) {
      pending->issue = ImportIssue{line_no, ErrorCode::kParseError, e.what(), truncate_record(line)};
    }
  }
  flush();
}

}  // namespace detail

inline ImportResult read_dataset(std::istream& in, DatasetFormat format,
                                 std::string_view source = "input") {
  ImportResult result;
  if (format == DatasetFormat::kCanonicalJsonl) {
    detail::read_canonical(in, result);
  } else {
    detail::read_vlsp(in, result, source);
  }
  return result;
}

inline ImportResult read_dataset(const std::filesystem::path& path,
                                 DatasetFormat format = DatasetFormat::kCanonicalJsonl) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return read_dataset(in, format, path.stem().string());
}

inline std::string describe_issues(const std::vector<ImportIssue>& issues) {
  std::ostringstream out;
  out << issues.size() << " invalid record(s)";
  for (const ImportIssue& issue : issues) {
    out << "\n  line " << issue.line << " [" << error_code_name(issue.code) << "] "
        << issue.message << ": " << issue.record;
  }
  return out.str();
}

// Strict import: any invalid record fails the whole file. The error code is
// SpanRemapError only when every issue is a remapping failure.
inline Dataset import_dataset(const std::filesystem::path& path,
                              DatasetFormat format = DatasetFormat::kCanonicalJsonl) {
  ImportResult result = read_dataset(path, format);
  if (!result.ok()) {
    const bool all_remap = std::all_of(result.issues.begin(), result.issues.end(), [](const auto& i) {
      return i.code == ErrorCode::kSpanRemapError;
    });
    fail(all_remap ? ErrorCode::kSpanRemapError : ErrorCode::kParseError,
         path.string() + ": " + describe_issues(result.issues));
  }
  return std::move(result.dataset);
}

inline nlohmann::ordered_json quintuple_to_json(const Quintuple& q) {
  nlohmann::ordered_json j;
  for (ElementKind kind : kElementKinds) {
    const auto& span = q.slot(kind);
    const std::string key(element_kind_name(kind));
    if (span) {
      j[key] = nlohmann::ordered_json::array({span->start, span->end});
    } else {
      j[key] = nullptr;
    }
  }
  j["label"] = std::string(label_name(q.label));
  return j;
}

inline nlohmann::ordered_json sentence_to_json(const Sentence& s) {
  nlohmann::ordered_json j;
  j["id"] = s.id;
  j["text"] = s.text;
  j["quintuples"] = nlohmann::ordered_json::array();
  for (const Quintuple& q : s.quintuples) j["quintuples"].push_back(quintuple_to_json(q));
  return j;
}

// Canonical JSONL: one sentence per line, keys in fixed order.
inline void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const Sentence& s : dataset.sentences) {
    out << sentence_to_json(s).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)
        << '\n';
  }
}

inline std::string dataset_to_string(const Dataset& dataset) {
  std::ostringstream out;
  write_dataset(out, dataset);
  return out.str();
}

inline void export_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  write_dataset(out, dataset);
  out.flush();
  if (!out) fail(ErrorCode::kIoError, "write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Lint.

struct LintConfig {
  std::size_t max_predicate_tokens = 10;
};

enum class LintRule { kLongPredicate = 1, kMissingOrMalformed = 2, kDuplicate = 3 };

inline std::string lint_rule_id(LintRule rule) {
  return "R" + std::to_string(static_cast<int>(rule));
}

struct LintFinding {
  LintRule rule;
  std::string sentence_id;
  std::string detail;

  bool operator==(const LintFinding&) const = default;
};

struct LintReport {
  std::vector<LintFinding> findings;

  bool empty() const { return findings.empty(); }
  std::size_t count(LintRule rule) const {
    return static_cast<std::size_t>(std::count_if(
        findings.begin(), findings.end(), [rule](const auto& f) { return f.rule == rule; }));
  }
};

namespace detail {

inline std::string describe_slots(const Sentence& s, const Quintuple& q) {
  std::string out = "(";
  for (ElementKind kind : kElementKinds) {
    if (kind != ElementKind::kSubject) out += ", ";
    const auto& span = q.slot(kind);
    if (!span) {
      out += "-";
    } else if (span->end < s.size() && span->start <= span->end) {
      out += "\"" + s.span_text(*span) + "\"";
    } else {
      out += "[" + std::to_string(span->start) + "," + std::to_string(span->end) + "]";
    }
  }
  return out + ", " + std::string(label_name(q.label)) + ")";
}

}  // namespace detail

// R1: predicate longer than the configured limit. R2: a comparison without a
// predicate, or an element set that cannot be tagged (empty, out of bounds,
// overlapping kinds). R3: the same quintuple listed twice in a sentence.
inline LintReport lint_dataset(const Dataset& dataset, const LintConfig& config = {}) {
  LintReport report;
  for (const Sentence& s : dataset.sentences) {
    for (std::size_t qi = 0; qi < s.quintuples.size(); ++qi) {
      const Quintuple& q = s.quintuples[qi];
      const std::string where = "quintuple " + std::to_string(qi) + " " + detail::describe_slots(s, q);
      if (const auto& pred = q.predicate(); pred && pred->start <= pred->end &&
                                            pred->length() > config.max_predicate_tokens) {
        report.findings.push_back({LintRule::kLongPredicate, s.id,
                                   where + ": predicate spans " + std::to_string(pred->length()) +
                                       " tokens (limit " +
                                       std::to_string(config.max_predicate_tokens) + ")"});
      }
      if (!any_present(q.elements)) {
        report.findings.push_back(
            {LintRule::kMissingOrMalformed, s.id, where + ": no element present"});
      } else if (!q.predicate()) {
        report.findings.push_back(
            {LintRule::kMissingOrMalformed, s.id, where + ": missing predicate"});
      }
      for (ElementKind kind : kElementKinds) {
        const auto& span = q.slot(kind);
        if (span && (span->start > span->end || span->end >= s.size())) {
          report.findings.push_back({LintRule::kMissingOrMalformed, s.id,
                                     where + ": " + std::string(element_kind_name(kind)) +
                                         " span out of bounds"});
        }
      }
    }
    try {
      (void)tags_for_quintuples(s);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kOverlappingElements) {
        report.findings.push_back({LintRule::kMissingOrMalformed, s.id, e.detail()});
      }
    }
    std::map<Quintuple, std::size_t> seen;
    for (const Quintuple& q : s.quintuples) ++seen[q];
    for (const auto& [q, n] : seen) {
      if (n > 1) {
        report.findings.push_back({LintRule::kDuplicate, s.id,
                                   detail::describe_slots(s, q) + " listed " + std::to_string(n) +
                                       " times"});
      }
    }
  }
  std::stable_sort(report.findings.begin(), report.findings.end(),
                   [](const LintFinding& a, const LintFinding& b) {
                     if (a.sentence_id != b.sentence_id) return a.sentence_id < b.sentence_id;
                     return a.rule < b.rule;
                   });
  return report;
}

inline nlohmann::ordered_json lint_report_to_json(const LintReport& report) {
  nlohmann::ordered_json j;
  j["count"] = report.findings.size();
  j["findings"] = nlohmann::ordered_json::array();
  for (const LintFinding& f : report.findings) {
    nlohmann::ordered_json fj;
    fj["rule"] = lint_rule_id(f.rule);
    fj["sentence_id"] = f.sentence_id;
    fj["detail"] = f.detail;
    j["findings"].push_back(std::move(fj));
  }
  return j;
}

inline std::string lint_report_to_text(const LintReport& report) {
  std::size_t id_width = std::string_view("Sentence").size();
  for (const auto& f : report.findings) id_width = std::max(id_width, utf8::length(f.sentence_id));
  std::ostringstream out;
  out << "Rule  " << std::left << std::setw(static_cast<int>(id_width)) << "Sentence"
      << "  Detail\n";
  for (const auto& f : report.findings) {
    out << lint_rule_id(f.rule) << "    " << f.sentence_id
        << std::string(id_width - utf8::length(f.sentence_id), ' ') << "  " << f.detail << '\n';
  }
  out << report.findings.size() << " finding(s)\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Statistics.

struct StatsReport {
  std::size_t sentences = 0;
  std::size_t comparative = 0;
  std::size_t non_comparative = 0;
  std::size_t mono_comparative = 0;
  std::size_t multi_comparative = 0;
  std::size_t quintuples = 0;
  std::array<std::size_t, kLabelCount> label_counts{};
  std::array<std::size_t, kElementKindCount> element_counts{};

  static double percent(std::size_t count, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
  }

  double comparative_percent() const { return percent(comparative, sentences); }
  double non_comparative_percent() const { return percent(non_comparative, sentences); }
  double mono_percent() const { return percent(mono_comparative, comparative); }
  double multi_percent() const { return percent(multi_comparative, comparative); }
  double label_percent(ComparisonLabel label) const {
    return percent(label_counts[index_of(label)], quintuples);
  }

  std::size_t label_count(ComparisonLabel label) const { return label_counts[index_of(label)]; }
  std::size_t element_count(ElementKind kind) const { return element_counts[index_of(kind)]; }
};

inline StatsReport dataset_stats(const Dataset& dataset) {
  StatsReport r;
  r.sentences = dataset.size();
  for (const Sentence& s : dataset.sentences) {
    if (!s.is_comparative()) {
      ++r.non_comparative;
      continue;
    }
    ++r.comparative;
    if (s.quintuples.size() >= 2) {
      ++r.multi_comparative;
    } else {
      ++r.mono_comparative;
    }
    for (const Quintuple& q : s.quintuples) {
      ++r.quintuples;
      ++r.label_counts[index_of(q.label)];
      for (ElementKind kind : kElementKinds) {
        if (q.slot(kind)) ++r.element_counts[index_of(kind)];
      }
    }
  }
  return r;
}

// Two decimals, matching how the dataset tables are usually reported.
inline std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

inline nlohmann::ordered_json stats_report_to_json(const StatsReport& r) {
  auto row = [](std::size_t count, double pct) {
    nlohmann::ordered_json j;
    j["count"] = count;
    j["percent"] = std::stod(format_percent(pct));
    return j;
  };
  nlohmann::ordered_json j;
  j["sentences"] = r.sentences;
  j["sentence"]["multi_comparative"] = row(r.multi_comparative, r.multi_percent());
  j["sentence"]["mono_comparative"] = row(r.mono_comparative, r.mono_percent());
  j["sentence"]["comparative"] = row(r.comparative, r.comparative_percent());
  j["sentence"]["non_comparative"] = row(r.non_comparative, r.non_comparative_percent());
  j["quintuples"] = r.quintuples;
  for (ComparisonLabel label : kComparisonLabels) {
    j["label"][std::string(label_name(label))] = row(r.label_count(label), r.label_percent(label));
  }
  for (ElementKind kind : kElementKinds) {
    j["element"][std::string(element_kind_name(kind))] = r.element_count(kind);
  }
  return j;
}

inline std::string stats_report_to_text(const StatsReport& r) {
  std::ostringstream out;
  auto line = [&](std::string_view section, std::string_view type, std::size_t n,
                  std::optional<double> pct) {
    out << std::left << std::setw(10) << section << std::setw(20) << type << std::right
        << std::setw(8) << n;
    if (pct) out << std::setw(10) << (format_percent(*pct) + "%");
    out << '\n';
  };
  out << std::left << std::setw(10) << "Section" << std::setw(20) << "Type" << std::right
      << std::setw(8) << "Number" << std::setw(10) << "Percent" << '\n';
  line("Sentence", "Multi-comparative", r.multi_comparative, r.multi_percent());
  line("Sentence", "Mono-comparative", r.mono_comparative, r.mono_percent());
  line("Sentence", "Comparative", r.comparative, r.comparative_percent());
  line("Sentence", "Non-comparative", r.non_comparative, r.non_comparative_percent());
  for (ComparisonLabel label : kComparisonLabels) {
    line("Label", label_name(label), r.label_count(label), r.label_percent(label));
  }
  constexpr std::array<std::string_view, kElementKindCount> kRows = {
      "Subject entity", "Object entity", "Aspect entity", "Predicate entity"};
  for (ElementKind kind : kElementKinds) {
    line("Element", kRows[index_of(kind)], r.element_count(kind), std::nullopt);
  }
  return out.str();
}

}  // namespace comom

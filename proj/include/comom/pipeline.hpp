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

// Three-stage extraction: comparative gate, element tagging, and
// classification of every candidate quadruple built from the tagged elements.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "comom/backend.hpp"
#include "comom/core.hpp"
#include "comom/ensemble.hpp"
#include "comom/error.hpp"
#include "comom/ingest.hpp"
#include "comom/spans.hpp"
#include "json.hpp"

namespace comom {

enum class Stage1Mode {
  kBinary,         // dedicated 2-way sentence classifier
  kTaggerDerived,  // comparative iff the stage-2 tagger finds any element
};

inline std::string_view stage1_mode_name(Stage1Mode mode) {
  return mode == Stage1Mode::kBinary ? "binary" : "tagger-derived";
}

inline Stage1Mode parse_stage1_mode(std::string_view text) {
  if (text == "binary") return Stage1Mode::kBinary;
  if (text == "tagger-derived" || text == "tagger") return Stage1Mode::kTaggerDerived;
  fail(ErrorCode::kInvalidArgument, "unknown stage-1 mode '" + std::string(text) + "'");
}

struct PipelineConfig {
  Stage1Mode stage1_mode = Stage1Mode::kTaggerDerived;
  // Stage-2 member weights; uniform when absent.
  std::optional<EnsembleWeights> stage2_weights;
  std::size_t max_quadruples = 256;
  // Sentences processed concurrently; only honoured when every backend is
  // thread safe.
  std::size_t workers = 1;

  void validate() const {
    if (max_quadruples < 1) fail(ErrorCode::kInvalidArgument, "max_quadruples must be at least 1");
    if (workers < 1) fail(ErrorCode::kInvalidArgument, "workers must be at least 1");
    if (stage2_weights) stage2_weights->validate();
  }
};

// Live handles for each stage. stage1 is only consulted in binary mode.
struct PipelineBackends {
  std::shared_ptr<Backend> stage1;
  std::vector<std::shared_ptr<Backend>> stage2;
  std::shared_ptr<Backend> stage3;

  bool thread_safe() const {
    auto safe = [](const std::shared_ptr<Backend>& b) { return !b || b->thread_safe(); };
    return safe(stage1) && safe(stage3) && std::all_of(stage2.begin(), stage2.end(), safe);
  }
};

inline void validate_backends(const PipelineConfig& config, const PipelineBackends& backends) {
  if (config.stage1_mode == Stage1Mode::kBinary && !backends.stage1) {
    fail(ErrorCode::kInvalidArgument, "binary stage-1 mode needs a sentence classifier");
  }
  if (backends.stage2.empty()) fail(ErrorCode::kInvalidArgument, "stage 2 needs at least one tagger");
  if (!backends.stage3) fail(ErrorCode::kInvalidArgument, "stage 3 needs a quadruple classifier");
  if (config.stage2_weights && config.stage2_weights->size() != backends.stage2.size()) {
    fail(ErrorCode::kWeightCountMismatch, std::to_string(config.stage2_weights->size()) +
                                              " stage-2 weights for " +
                                              std::to_string(backends.stage2.size()) + " taggers");
  }
}

// What happened to one sentence on its way through the stages.
struct SentenceTrace {
  std::string id;
  bool gated_comparative = false;  // stage-1 decision
  bool comparative = false;        // final decision after demotion
  ElementSets elements;            // stage-2 output; empty when gated out
  std::size_t candidates = 0;
  bool truncated = false;
  bool demoted = false;
  std::vector<Quintuple> quintuples;
  double stage_seconds[3] = {0, 0, 0};
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename F>
auto with_stage(int stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    fail(e.code(), "stage " + std::to_string(stage) + ": " + e.detail());
  }
}

}  // namespace detail

// Runs one sentence through the three stages and records the trace.
inline SentenceTrace trace_sentence(const Sentence& sentence, const PipelineConfig& config,
                                    const PipelineBackends& backends) {
  using Steady = std::chrono::steady_clock;
  SentenceTrace t;
  t.id = sentence.id;
  const std::span<const Sentence> one(&sentence, 1);

  auto t0 = Steady::now();
  if (config.stage1_mode == Stage1Mode::kBinary) {
    const LogitVector logits =
        detail::with_stage(1, [&] { return classify_sentence(*backends.stage1, one).front(); });
    // Equal scores count as non-comparative.
    t.gated_comparative = logits[1] > logits[0];
    t.stage_seconds[0] = detail::seconds_since(t0);
    if (!t.gated_comparative) return t;
  }

  t0 = Steady::now();
  const TagLogits combined = detail::with_stage(2, [&] {
    std::vector<TagLogits> per_member;
    per_member.reserve(backends.stage2.size());
    for (const auto& member : backends.stage2) per_member.push_back(tag_tokens(*member, one).front());
    const EnsembleWeights w =
        config.stage2_weights ? *config.stage2_weights : EnsembleWeights::uniform(per_member.size());
    return combine_weighted(per_member, w);
  });
  t.elements = decode_spans(combined);
  t.stage_seconds[1] = detail::seconds_since(t0);
  if (config.stage1_mode == Stage1Mode::kTaggerDerived) {
    t.gated_comparative = !t.elements.empty();
    if (!t.gated_comparative) return t;
  }

  t0 = Steady::now();
  if (!t.elements.empty()) {
    const QuadrupleList quads = generate_quadruples(t.elements, config.max_quadruples);
    t.candidates = quads.items.size();
    t.truncated = quads.truncated;
    const auto logits = detail::with_stage(
        3, [&] { return classify_quadruples(*backends.stage3, sentence, quads.items); });
    for (std::size_t i = 0; i < quads.items.size(); ++i) {
      const auto label = to_comparison_label(static_cast<StageLabel>(argmax(logits[i])));
      if (!label) continue;
      Quintuple q{quads.items[i], *label};
      if (std::find(t.quintuples.begin(), t.quintuples.end(), q) == t.quintuples.end()) {
        t.quintuples.push_back(q);
      }
    }
  }
  t.stage_seconds[2] = detail::seconds_since(t0);
  t.comparative = !t.quintuples.empty();
  t.demoted = !t.comparative;
  return t;
}

inline std::vector<Quintuple> predict_sentence(const Sentence& sentence, const PipelineConfig& config,
                                               const PipelineBackends& backends) {
  return trace_sentence(sentence, config, backends).quintuples;
}

struct RunReport {
  std::size_t sentences = 0;
  std::size_t gated_comparative = 0;
  std::size_t comparative = 0;
  std::size_t demotions = 0;
  std::size_t truncations = 0;
  std::size_t candidates = 0;
  std::size_t quintuples = 0;
  double stage_seconds[3] = {0, 0, 0};
  double wall_seconds = 0;
  std::size_t workers = 1;

  void add(const SentenceTrace& t) {
    ++sentences;
    gated_comparative += t.gated_comparative;
    comparative += t.comparative;
    demotions += t.demoted;
    truncations += t.truncated;
    candidates += t.candidates;
    quintuples += t.quintuples.size();
    for (int i = 0; i < 3; ++i) stage_seconds[i] += t.stage_seconds[i];
  }
};

inline nlohmann::ordered_json run_report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["sentences"] = r.sentences;
  j["gated_comparative"] = r.gated_comparative;
  j["comparative"] = r.comparative;
  j["demotions"] = r.demotions;
  j["truncations"] = r.truncations;
  j["candidates"] = r.candidates;
  j["quintuples"] = r.quintuples;
  j["stage_seconds"] = {r.stage_seconds[0], r.stage_seconds[1], r.stage_seconds[2]};
  j["wall_seconds"] = r.wall_seconds;
  j["workers"] = r.workers;
  return j;
}

struct PipelineResult {
  Dataset predictions;
  std::vector<SentenceTrace> traces;
  RunReport report;
};

inline Sentence prediction_record(const Sentence& input, std::vector<Quintuple> quintuples) {
  Sentence out;
  out.id = input.id;
  out.text = input.text;
  out.tokens = input.tokens;
  out.quintuples = std::move(quintuples);
  return out;
}

// Runs every sentence, in parallel when allowed. On the first failure the
// predictions finished so far are written to `partial_path` (if given) and the
// error is rethrown.
inline PipelineResult run_pipeline(const Dataset& dataset, const PipelineConfig& config,
                                   const PipelineBackends& backends,
                                   const std::optional<std::filesystem::path>& partial_path = std::nullopt) {
  config.validate();
  validate_backends(config, backends);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = dataset.size();
  std::vector<std::optional<SentenceTrace>> traces(n);

  const std::size_t workers =
      backends.thread_safe() ? std::max<std::size_t>(1, std::min(config.workers, n)) : 1;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::size_t error_index = n;

  auto work = [&] {
    for (;;) {
      if (stop.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        traces[i] = trace_sentence(dataset.sentences[i], config, backends);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        stop.store(true);
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  PipelineResult result;
  result.predictions.provenance = dataset.provenance;
  for (std::size_t i = 0; i < n; ++i) {
    if (!traces[i]) continue;
    result.predictions.sentences.push_back(prediction_record(dataset.sentences[i], traces[i]->quintuples));
  }
  if (error) {
    if (partial_path) export_dataset(result.predictions, *partial_path);
    try {
      std::rethrow_exception(error);
    } catch (const Error& e) {
      fail(e.code(), "sentence '" + dataset.sentences[error_index].id + "': " + e.detail() +
                         (partial_path ? " (partial results in " + partial_path->string() + ")" : ""));
    }
  }
  for (auto& t : traces) {
    result.report.add(*t);
    result.traces.push_back(std::move(*t));
  }
  result.report.workers = workers;
  result.report.wall_seconds = detail::seconds_since(start);
  return result;
}

// ---------------------------------------------------------------------------
// Pipeline documents.
//
//   {"stage1": {"mode": "binary", "ensemble": <manifest or path>},
//    "stage2": {"ensemble": <manifest or path>, "weights": [0.2, 0.3, 0.5]},
//    "stage3": {"ensemble": <manifest or path>},
//    "max_quadruples": 256, "decode": "lenient", "workers": 1}
//
// Paths are relative to the document. Each stage-2 manifest member is one
// tagger of the weighted combination.

struct PipelineDocument {
  PipelineConfig config;
  std::optional<nlohmann::json> stage1;
  nlohmann::json stage2;
  nlohmann::json stage3;
};

inline nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["stage1_mode"] = std::string(stage1_mode_name(c.stage1_mode));
  if (c.stage2_weights) j["stage2_weights"] = c.stage2_weights->values;
  j["max_quadruples"] = c.max_quadruples;
  j["decode"] = "lenient";
  j["workers"] = c.workers;
  return j;
}

inline PipelineDocument pipeline_document_from_json(const nlohmann::json& j) {
  PipelineDocument doc;
  try {
    if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "pipeline document must be a JSON object");
    const auto& s1 = j.at("stage1");
    doc.config.stage1_mode = parse_stage1_mode(s1.value("mode", std::string("tagger-derived")));
    if (doc.config.stage1_mode == Stage1Mode::kBinary) doc.stage1 = s1.at("ensemble");
    const auto& s2 = j.at("stage2");
    doc.stage2 = s2.at("ensemble");
    if (s2.contains("weights")) doc.config.stage2_weights = EnsembleWeights(s2["weights"].get<std::vector<double>>());
    doc.stage3 = j.at("stage3").at("ensemble");
    doc.config.max_quadruples = j.value("max_quadruples", doc.config.max_quadruples);
    doc.config.workers = j.value("workers", doc.config.workers);
    if (j.value("decode", std::string("lenient")) != "lenient") {
      fail(ErrorCode::kInvalidArgument, "only the lenient decode policy is supported");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("pipeline document: ") + e.what());
  }
  doc.config.validate();
  return doc;
}

namespace detail {

inline EnsembleManifest load_manifest_ref(const nlohmann::json& ref, const std::filesystem::path& base_dir,
                                          std::filesystem::path& manifest_dir) {
  if (ref.is_string()) {
    std::filesystem::path p = ref.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    manifest_dir = p.parent_path();
    return read_manifest(p);
  }
  manifest_dir = base_dir;
  return manifest_from_json(ref);
}

inline void expect_task(const EnsembleManifest& m, Task task, int stage) {
  if (m.task != task) {
    fail(ErrorCode::kTaskMismatch, "stage " + std::to_string(stage) + " needs a " +
                                       std::string(task_name(task)) + " ensemble, got " +
                                       std::string(task_name(m.task)));
  }
}

}  // namespace detail

// Loads models and connects adapters for every stage of a pipeline document.
// A weighted stage-2 manifest supplies the stage-2 weights when the document
// gives none.
inline PipelineBackends open_pipeline(PipelineDocument& doc, const std::filesystem::path& base_dir,
                                      ExternalOptions options = {}) {
  PipelineBackends b;
  std::filesystem::path dir;
  if (doc.stage1) {
    const EnsembleManifest m = detail::load_manifest_ref(*doc.stage1, base_dir, dir);
    detail::expect_task(m, Task::kSentence, 1);
    b.stage1 = open_manifest(m, dir, options);
  }
  {
    EnsembleManifest m = detail::load_manifest_ref(doc.stage2, base_dir, dir);
    detail::expect_task(m, Task::kTag, 2);
    if (!doc.config.stage2_weights && m.weighted) {
      std::vector<double> w;
      for (const ManifestMember& member : m.members) w.push_back(member.weight);
      doc.config.stage2_weights = EnsembleWeights(std::move(w));
    }
    for (const ManifestMember& member : m.members) {
      EnsembleManifest single = m;
      single.weighted = false;
      single.members = {member};
      b.stage2.push_back(open_manifest(single, dir, options));
    }
  }
  {
    const EnsembleManifest m = detail::load_manifest_ref(doc.stage3, base_dir, dir);
    detail::expect_task(m, Task::kQuadruple, 3);
    b.stage3 = open_manifest(m, dir, options);
  }
  return b;
}

inline PipelineDocument read_pipeline_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open pipeline document '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return pipeline_document_from_json(j);
}

}  // namespace comom

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

// Native baselines: one linear model per sub-task, usable without any external
// model process.

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "comom/backend.hpp"
#include "comom/core.hpp"
#include "comom/features.hpp"
#include "comom/model.hpp"
#include "comom/spans.hpp"

namespace comom {

// Training candidates for the quadruple classifier: every combination of the
// sentence's gold element sets, labelled with the gold label when it matches a
// gold comparison and NONE otherwise, plus any gold comparison the product
// cannot reach (one whose absent slot has a non-empty set).
inline std::vector<std::pair<Quadruple, StageLabel>> quadruple_training_candidates(
    const Sentence& s, std::size_t cap = 256) {
  std::vector<std::pair<Quadruple, StageLabel>> out;
  if (!s.is_comparative()) return out;
  auto gold_label = [&](const Quadruple& q) -> StageLabel {
    for (const Quintuple& g : s.quintuples) {
      if (g.elements == q) return to_stage_label(g.label);
    }
    return StageLabel::kNone;
  };
  const QuadrupleList product = generate_quadruples(element_sets_of(s), cap);
  for (const Quadruple& q : product.items) out.emplace_back(q, gold_label(q));
  for (const Quintuple& g : s.quintuples) {
    const bool listed = std::any_of(out.begin(), out.end(),
                                    [&](const auto& c) { return c.first == g.elements; });
    if (!listed) out.emplace_back(g.elements, to_stage_label(g.label));
  }
  return out;
}

struct ExampleSet {
  std::vector<ExampleGroup> groups;
  std::size_t skipped = 0;  // sentences whose annotation cannot be projected
};

// One group per sentence. The tag and quadruple tasks learn from comparative
// sentences only, unless the config asks the tagger to see every sentence.
inline ExampleSet build_examples(Task task, const Dataset& dataset, const TrainConfig& config) {
  ExampleSet out;
  for (const Sentence& s : dataset.sentences) {
    ExampleGroup group;
    switch (task) {
      case Task::kSentence:
        group.push_back({sentence_features(s.tokens, config.hash_dim, config.hash_salt),
                         s.is_comparative() ? 1u : 0u});
        break;
      case Task::kTag: {
        if (!s.is_comparative() && !config.include_non_comparative) continue;
        std::vector<Tag> tags;
        try {
          tags = tags_for_quintuples(s);
        } catch (const Error&) {
          ++out.skipped;
          continue;
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
          group.push_back({token_features(s.tokens, i, config.hash_dim, config.hash_salt),
                           static_cast<std::uint32_t>(index_of(tags[i]))});
        }
        break;
      }
      case Task::kQuadruple: {
        if (!s.is_comparative()) continue;
        for (const auto& [quad, label] : quadruple_training_candidates(s)) {
          group.push_back({quadruple_features(s, quad, config.hash_dim, config.hash_salt),
                           static_cast<std::uint32_t>(label)});
        }
        break;
      }
    }
    if (!group.empty()) out.groups.push_back(std::move(group));
  }
  return out;
}

class NativeBackend : public Backend {
 public:
  explicit NativeBackend(std::string name) { descriptor_.name = std::move(name); }

  NativeBackend(std::string name, LinearModel model) : NativeBackend(std::move(name)) {
    add(std::move(model));
  }

  void add(LinearModel model) {
    descriptor_.capabilities.insert(model.task());
    models_[model.task()] = std::make_shared<const LinearModel>(std::move(model));
  }

  static std::shared_ptr<NativeBackend> from_file(const std::filesystem::path& path,
                                                  std::string name = {}) {
    auto backend = std::make_shared<NativeBackend>(name.empty() ? path.filename().string() : name);
    backend->add(LinearModel::load(path));
    return backend;
  }

  const LinearModel& model(Task task) const {
    auto it = models_.find(task);
    if (it == models_.end()) {
      fail(ErrorCode::kCapabilityMissing,
           "backend '" + descriptor_.name + "' has no " + std::string(task_name(task)) + " model");
    }
    return *it->second;
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  bool thread_safe() const override { return true; }

  std::vector<LogitVector> classify_sentences(std::span<const Sentence> batch) override {
    const LinearModel& m = model(Task::kSentence);
    std::vector<LogitVector> out;
    out.reserve(batch.size());
    for (const Sentence& s : batch) out.push_back(m.logits(sentence_features(s.tokens, m.dim(), m.salt())));
    return out;
  }

  std::vector<TagLogits> tag_sentences(std::span<const Sentence> batch) override {
    const LinearModel& m = model(Task::kTag);
    std::vector<TagLogits> out;
    out.reserve(batch.size());
    for (const Sentence& s : batch) {
      TagLogits rows;
      rows.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        rows.push_back(m.logits(token_features(s.tokens, i, m.dim(), m.salt())));
      }
      out.push_back(std::move(rows));
    }
    return out;
  }

  std::vector<LogitVector> classify_quadruples(const Sentence& sentence,
                                               std::span<const Quadruple> quads) override {
    const LinearModel& m = model(Task::kQuadruple);
    std::vector<LogitVector> out;
    out.reserve(quads.size());
    for (const Quadruple& q : quads) {
      out.push_back(m.logits(quadruple_features(sentence, q, m.dim(), m.salt())));
    }
    return out;
  }

 private:
  BackendDescriptor descriptor_;
  std::map<Task, std::shared_ptr<const LinearModel>> models_;
};

struct NativeTrainResult {
  LinearModel model;
  BackendDescriptor descriptor;
  std::size_t groups = 0;
  std::size_t examples = 0;
  std::size_t skipped = 0;

  std::shared_ptr<NativeBackend> backend() const {
    return std::make_shared<NativeBackend>(descriptor.name, model);
  }
};

// Fits a native linear model for one sub-task; deterministic for a fixed
// dataset and config.
inline NativeTrainResult train_native(Task task, const Dataset& dataset, const TrainConfig& config,
                                      std::string name = {}) {
  config.validate();
  if (dataset.empty()) fail(ErrorCode::kEmptyTrainingSet, "training dataset is empty");
  if (task == Task::kSentence) {
    const auto comparative = std::count_if(dataset.sentences.begin(), dataset.sentences.end(),
                                           [](const Sentence& s) { return s.is_comparative(); });
    if (comparative == 0 || static_cast<std::size_t>(comparative) == dataset.size()) {
      fail(ErrorCode::kTaskMismatch,
           "sentence classifier needs both comparative and non-comparative sentences");
    }
  }
  ExampleSet examples = build_examples(task, dataset, config);
  if (examples.groups.empty()) {
    fail(ErrorCode::kEmptyTrainingSet,
         "no usable " + std::string(task_name(task)) + " training examples (only comparative "
         "sentences train the tag and quadruple tasks)");
  }
  NativeTrainResult result;
  result.model = LinearModel(task, output_width(task), config.hash_dim, config.hash_salt);
  train_linear(result.model, examples.groups, config);
  result.groups = examples.groups.size();
  for (const auto& g : examples.groups) result.examples += g.size();
  result.skipped = examples.skipped;
  result.descriptor.name = name.empty() ? "native-" + std::string(task_name(task)) : std::move(name);
  result.descriptor.capabilities = {task};
  result.descriptor.kind = BackendKind::kNative;
  return result;
}

}  // namespace comom

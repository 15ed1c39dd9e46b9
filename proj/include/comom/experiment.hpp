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

// The five experiment presets and a driver that trains native models for a
// preset, runs the pipeline on a held-out split and scores it.
//
//   preset  data  bootstrap  stage 1
//   E1      v2    yes        tagger-derived
//   E2      v2    no         binary
//   E3      v2    yes        binary
//   E4      v3    no         tagger-derived
//   E5      v3    yes        tagger-derived
//
// Bootstrapping applies to the sentence and quadruple classifiers. Stage 2 is
// always a weighted ensemble of taggers.

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "comom/core.hpp"
#include "comom/ensemble.hpp"
#include "comom/error.hpp"
#include "comom/eval.hpp"
#include "comom/ingest.hpp"
#include "comom/model.hpp"
#include "comom/native.hpp"
#include "comom/pipeline.hpp"
#include "comom/random.hpp"
#include "json.hpp"

namespace comom {

struct ExperimentPreset {
  std::string name;
  int dataset_version = 2;
  bool bootstrap = false;
  Stage1Mode stage1_mode = Stage1Mode::kTaggerDerived;

  bool operator==(const ExperimentPreset&) const = default;
};

inline const std::array<ExperimentPreset, 5>& experiment_presets() {
  static const std::array<ExperimentPreset, 5> kPresets = {{
      {"E1", 2, true, Stage1Mode::kTaggerDerived},
      {"E2", 2, false, Stage1Mode::kBinary},
      {"E3", 2, true, Stage1Mode::kBinary},
      {"E4", 3, false, Stage1Mode::kTaggerDerived},
      {"E5", 3, true, Stage1Mode::kTaggerDerived},
  }};
  return kPresets;
}

inline const ExperimentPreset& experiment_preset(std::string_view name) {
  for (const auto& p : experiment_presets()) {
    if (p.name == name) return p;
  }
  fail(ErrorCode::kInvalidArgument, "unknown experiment preset '" + std::string(name) + "' (E1..E5)");
}

inline nlohmann::ordered_json preset_to_json(const ExperimentPreset& p) {
  nlohmann::ordered_json j;
  j["name"] = p.name;
  j["dataset_version"] = p.dataset_version;
  j["bootstrap"] = p.bootstrap;
  j["stage1_mode"] = std::string(stage1_mode_name(p.stage1_mode));
  return j;
}

inline ExperimentPreset preset_from_json(const nlohmann::json& j) {
  ExperimentPreset p;
  try {
    p.name = j.at("name").get<std::string>();
    p.dataset_version = j.at("dataset_version").get<int>();
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.stage1_mode = parse_stage1_mode(j.at("stage1_mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("experiment preset: ") + e.what());
  }
  return p;
}

struct ExperimentConfig {
  TrainConfig train;
  double held_out_fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::size_t folds = 3;
  std::uint64_t fold_seed = 0;
  EnsembleWeights stage2_weights = default_extraction_weights();
  std::size_t max_quadruples = 256;
  Averaging averaging = Averaging::kSkipAbsent;

  void validate() const {
    train.validate();
    if (!(held_out_fraction > 0 && held_out_fraction < 1)) {
      fail(ErrorCode::kInvalidArgument, "held_out_fraction must lie in (0, 1)");
    }
    if (folds < 2) fail(ErrorCode::kInvalidArgument, "folds must be at least 2");
    if (stage2_weights.size() == 0) fail(ErrorCode::kInvalidArgument, "stage 2 needs at least one tagger");
    stage2_weights.validate();
    if (max_quadruples < 1) fail(ErrorCode::kInvalidArgument, "max_quadruples must be at least 1");
  }
};

inline nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["train"] = train_config_to_json(c.train);
  j["held_out_fraction"] = c.held_out_fraction;
  j["split_seed"] = c.split_seed;
  j["folds"] = c.folds;
  j["fold_seed"] = c.fold_seed;
  j["stage2_weights"] = c.stage2_weights.values;
  j["max_quadruples"] = c.max_quadruples;
  j["averaging"] = std::string(averaging_name(c.averaging));
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "experiment config must be a JSON object");
  try {
    if (j.contains("train")) base.train = train_config_from_json(j["train"], base.train);
    base.held_out_fraction = j.value("held_out_fraction", base.held_out_fraction);
    base.split_seed = j.value("split_seed", base.split_seed);
    base.folds = j.value("folds", base.folds);
    base.fold_seed = j.value("fold_seed", base.fold_seed);
    if (j.contains("stage2_weights")) {
      base.stage2_weights = EnsembleWeights(j["stage2_weights"].get<std::vector<double>>());
    }
    base.max_quadruples = j.value("max_quadruples", base.max_quadruples);
    if (j.contains("averaging")) base.averaging = parse_averaging(j["averaging"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("experiment config: ") + e.what());
  }
  base.validate();
  return base;
}

struct Split {
  Dataset train;
  Dataset held_out;
};

// Synthetic sentences ("<template id>#aug<n>") stay on the same side as their
// template, so no held-out sentence shares a template with training data.
inline std::string template_id(std::string_view id) {
  const auto pos = id.find("#aug");
  return std::string(pos == std::string_view::npos ? id : id.substr(0, pos));
}

inline Split split_dataset(const Dataset& dataset, double held_out_fraction, std::uint64_t seed) {
  std::vector<std::string> groups;
  std::map<std::string, std::size_t> group_index;
  for (const Sentence& s : dataset.sentences) {
    const std::string g = template_id(s.id);
    if (group_index.emplace(g, groups.size()).second) groups.push_back(g);
  }
  if (groups.size() < 2) fail(ErrorCode::kTooFewSamples, "need at least two sentence groups to split");
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  std::size_t n_held = static_cast<std::size_t>(std::llround(held_out_fraction * static_cast<double>(groups.size())));
  n_held = std::clamp<std::size_t>(n_held, 1, groups.size() - 1);
  std::vector<bool> held(groups.size(), false);
  for (std::size_t i = 0; i < n_held; ++i) held[order[i]] = true;
  Split out;
  out.train.provenance = dataset.provenance;
  out.held_out.provenance = dataset.provenance;
  for (const Sentence& s : dataset.sentences) {
    (held[group_index.at(template_id(s.id))] ? out.held_out : out.train).sentences.push_back(s);
  }
  return out;
}

struct ExperimentResult {
  ExperimentPreset preset;
  EvalReport report;
  RunReport run;
  std::size_t train_sentences = 0;
  std::size_t held_out_sentences = 0;
  // Models trained per stage (0 for a stage that is not trained).
  std::array<std::size_t, 3> models = {0, 0, 0};
  Dataset predictions;
};

inline nlohmann::ordered_json experiment_result_to_json(const ExperimentResult& r,
                                                        const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["preset"] = preset_to_json(r.preset);
  j["config"] = experiment_config_to_json(config);
  j["train_sentences"] = r.train_sentences;
  j["held_out_sentences"] = r.held_out_sentences;
  j["models"] = {{"stage1", r.models[0]}, {"stage2", r.models[1]}, {"stage3", r.models[2]}};
  j["evaluation"] = eval_report_to_json(r.report);
  return j;
}

namespace detail {

// Trains one stage classifier, bootstrapped or not, saves it under `dir` and
// returns its manifest path relative to `dir`.
inline std::string train_stage_classifier(Task task, const Dataset& train, const ExperimentConfig& config,
                                          bool bootstrap, const std::filesystem::path& dir,
                                          const std::string& stem, std::size_t& models) {
  const std::string manifest = stem + ".manifest.json";
  if (bootstrap) {
    const FoldPlan plan = make_folds(train, config.folds, config.fold_seed);
    const BootstrapEnsemble ensemble = bootstrap_train(task, train, plan, config.train);
    save_bootstrap(ensemble, dir / manifest);
    models = ensemble.members.size();
  } else {
    const NativeTrainResult result = train_native(task, train, config.train, stem);
    const std::string file = stem + ".model";
    result.model.save(dir / file);
    EnsembleManifest m;
    m.task = task;
    m.members.push_back(ManifestMember{file, std::nullopt, stem, 1.0});
    write_json_file(dir / manifest, manifest_to_json(m));
    models = 1;
  }
  return manifest;
}

}  // namespace detail

// Trains every stage on `data` minus the held-out split, writes models,
// manifests, the pipeline document, predictions and reports into `out_dir`.
inline ExperimentResult run_experiment(const ExperimentPreset& preset, const Dataset& data,
                                       const std::filesystem::path& out_dir,
                                       const ExperimentConfig& config = {}) {
  config.validate();
  if (data.empty()) fail(ErrorCode::kEmptyTrainingSet, "experiment dataset is empty");
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  result.preset = preset;
  const Split split = split_dataset(data, config.held_out_fraction, config.split_seed);
  result.train_sentences = split.train.size();
  result.held_out_sentences = split.held_out.size();

  nlohmann::ordered_json doc;
  if (preset.stage1_mode == Stage1Mode::kBinary) {
    const std::string m = detail::train_stage_classifier(Task::kSentence, split.train, config,
                                                         preset.bootstrap, out_dir, "stage1", result.models[0]);
    doc["stage1"] = {{"mode", "binary"}, {"ensemble", m}};
  } else {
    doc["stage1"] = {{"mode", "tagger-derived"}};
  }

  {
    TrainConfig tagger = config.train;
    tagger.include_non_comparative = preset.stage1_mode == Stage1Mode::kTaggerDerived;
    EnsembleManifest m;
    m.task = Task::kTag;
    m.weighted = true;
    for (std::size_t i = 0; i < config.stage2_weights.size(); ++i) {
      TrainConfig member = tagger;
      member.seed = tagger.seed + i;
      member.hash_salt = tagger.hash_salt + i;
      const std::string name = "stage2.t" + std::to_string(i);
      const NativeTrainResult r = train_native(Task::kTag, split.train, member, name);
      r.model.save(out_dir / (name + ".model"));
      m.members.push_back(ManifestMember{name + ".model", std::nullopt, name, config.stage2_weights.values[i]});
    }
    write_json_file(out_dir / "stage2.manifest.json", manifest_to_json(m));
    result.models[1] = m.members.size();
    doc["stage2"] = {{"ensemble", "stage2.manifest.json"}, {"weights", config.stage2_weights.values}};
  }

  doc["stage3"] = {{"ensemble", detail::train_stage_classifier(Task::kQuadruple, split.train, config,
                                                               preset.bootstrap, out_dir, "stage3",
                                                               result.models[2])}};
  doc["max_quadruples"] = config.max_quadruples;
  doc["decode"] = "lenient";
  write_json_file(out_dir / "pipeline.json", doc);

  PipelineDocument pipeline = pipeline_document_from_json(nlohmann::json::parse(doc.dump()));
  const PipelineBackends backends = open_pipeline(pipeline, out_dir);
  PipelineResult run = run_pipeline(split.held_out, pipeline.config, backends);

  result.report = e_t5_macro(split.held_out, run.predictions, config.averaging);
  result.report.stages = stage_metrics(split.held_out, run.traces);
  result.run = run.report;
  result.predictions = std::move(run.predictions);

  export_dataset(split.held_out, out_dir / "held_out.jsonl");
  export_dataset(result.predictions, out_dir / "predictions.jsonl");
  write_json_file(out_dir / "preset.json", preset_to_json(preset));
  write_json_file(out_dir / "report.json", experiment_result_to_json(result, config));
  write_json_file(out_dir / "run.json", run_report_to_json(result.run));
  return result;
}

inline std::filesystem::path dataset_version_path(const std::filesystem::path& data_dir, int version) {
  return data_dir / ("v" + std::to_string(version) + ".jsonl");
}

// Reads v<N>.jsonl for the preset's dataset version from `data_dir`.
inline ExperimentResult run_experiment(const ExperimentPreset& preset, const std::filesystem::path& data_dir,
                                       const std::filesystem::path& out_dir,
                                       const ExperimentConfig& config = {}) {
  const auto path = dataset_version_path(data_dir, preset.dataset_version);
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kMissingDatasetVersion,
         "preset " + preset.name + " needs dataset version " + std::to_string(preset.dataset_version) +
             " at " + path.string() + " (build it with the augment command)");
  }
  return run_experiment(preset, import_dataset(path, DatasetFormat::kCanonicalJsonl), out_dir, config);
}

}  // namespace comom

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

// Logit ensembling.
//
// combine_weighted sums raw member logits with per-member weights and no
// normalization. Bootstrapping here is k-fold bagging: member i trains on every
// fold but i, validates on fold i, and predictions average the members' logits.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "comom/backend.hpp"
#include "comom/core.hpp"
#include "comom/error.hpp"
#include "comom/external.hpp"
#include "comom/model.hpp"
#include "comom/native.hpp"
#include "comom/random.hpp"
#include "json.hpp"

namespace comom {

// ---------------------------------------------------------------------------
// Tensor helpers over double and (nested) std::vector<double>.

namespace detail {

template <typename T>
struct is_vector : std::false_type {};
template <typename T, typename A>
struct is_vector<std::vector<T, A>> : std::true_type {};

template <typename T>
bool same_shape(const T& a, const T& b) {
  if constexpr (std::is_arithmetic_v<T>) {
    return true;
  } else {
    static_assert(is_vector<T>::value, "logit tensors are doubles or nested std::vector");
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!same_shape(a[i], b[i])) return false;
    }
    return true;
  }
}

template <typename T>
void scale_into(T& out, double w, const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    out = w * x;
  } else {
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scale_into(out[i], w, x[i]);
  }
}

template <typename T>
void add_scaled(T& out, double w, const T& x) {
  if constexpr (std::is_arithmetic_v<T>) {
    out += w * x;
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) add_scaled(out[i], w, x[i]);
  }
}

// out <- out + (x - out) / n. Identical inputs leave `out` unchanged exactly.
template <typename T>
void update_mean(T& out, const T& x, double n) {
  if constexpr (std::is_arithmetic_v<T>) {
    out += (x - out) / n;
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) update_mean(out[i], x[i], n);
  }
}

template <typename T>
void check_shapes(std::span<const T> sets) {
  for (std::size_t i = 1; i < sets.size(); ++i) {
    if (!same_shape(sets[0], sets[i])) {
      fail(ErrorCode::kShapeMismatch,
           "member " + std::to_string(i) + " logits differ in shape from member 0");
    }
  }
}

}  // namespace detail

// Non-negative per-member weights, at least one positive.
struct EnsembleWeights {
  std::vector<double> values;

  EnsembleWeights() = default;
  EnsembleWeights(std::initializer_list<double> w) : values(w) {}
  explicit EnsembleWeights(std::vector<double> w) : values(std::move(w)) {}

  static EnsembleWeights uniform(std::size_t k) {
    return EnsembleWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t size() const { return values.size(); }

  void validate() const {
    bool positive = false;
    for (double w : values) {
      if (!std::isfinite(w) || w < 0) {
        fail(ErrorCode::kInvalidArgument, "ensemble weights must be finite and non-negative");
      }
      positive = positive || w > 0;
    }
    if (!positive) fail(ErrorCode::kInvalidArgument, "at least one ensemble weight must be positive");
  }
};

// Weights (0.2, 0.3, 0.5) found by hand for the three element-extraction
// members; configuration, not a constant of the method.
inline EnsembleWeights default_extraction_weights() { return EnsembleWeights{0.2, 0.3, 0.5}; }

// Elementwise sum of w_i * Y_i over equal-shape logit tensors, accumulated in
// member order.
template <typename T>
T combine_weighted(std::span<const T> logit_sets, const EnsembleWeights& weights) {
  if (logit_sets.empty()) fail(ErrorCode::kWeightCountMismatch, "no logits to combine");
  if (weights.size() != logit_sets.size()) {
    fail(ErrorCode::kWeightCountMismatch, std::to_string(weights.size()) + " weights for " +
                                              std::to_string(logit_sets.size()) + " members");
  }
  weights.validate();
  detail::check_shapes(logit_sets);
  T out;
  detail::scale_into(out, weights.values[0], logit_sets[0]);
  for (std::size_t i = 1; i < logit_sets.size(); ++i) {
    detail::add_scaled(out, weights.values[i], logit_sets[i]);
  }
  return out;
}

template <typename T>
T combine_weighted(const std::vector<T>& logit_sets, const EnsembleWeights& weights) {
  return combine_weighted(std::span<const T>(logit_sets), weights);
}

// Arithmetic mean of member logits, computed as a running mean so that
// identical members reproduce their common output exactly.
template <typename T>
T mean_logits(std::span<const T> logit_sets) {
  if (logit_sets.empty()) fail(ErrorCode::kShapeMismatch, "no logits to average");
  detail::check_shapes(logit_sets);
  T out = logit_sets[0];
  for (std::size_t i = 1; i < logit_sets.size(); ++i) {
    detail::update_mean(out, logit_sets[i], static_cast<double>(i + 1));
  }
  return out;
}

template <typename T>
T mean_logits(const std::vector<T>& logit_sets) {
  return mean_logits(std::span<const T>(logit_sets));
}

// ---------------------------------------------------------------------------
// Ensemble backend.

// Presents several member backends as one: either the weighted sum of their
// logits or their mean.
class EnsembleBackend : public Backend {
 public:
  EnsembleBackend(std::string name, std::vector<std::shared_ptr<Backend>> members,
                  std::optional<EnsembleWeights> weights = std::nullopt)
      : members_(std::move(members)), weights_(std::move(weights)) {
    if (members_.empty()) fail(ErrorCode::kInvalidArgument, "ensemble '" + name + "' has no member");
    if (weights_) {
      if (weights_->size() != members_.size()) {
        fail(ErrorCode::kWeightCountMismatch, "ensemble '" + name + "': " +
                                                  std::to_string(weights_->size()) + " weights for " +
                                                  std::to_string(members_.size()) + " members");
      }
      weights_->validate();
    }
    descriptor_.name = std::move(name);
    descriptor_.kind = BackendKind::kNative;
    descriptor_.capabilities = members_[0]->descriptor().capabilities;
    for (const auto& m : members_) {
      std::set<Task> keep;
      for (Task t : descriptor_.capabilities) {
        if (m->descriptor().has(t)) keep.insert(t);
      }
      descriptor_.capabilities = std::move(keep);
      if (m->descriptor().kind == BackendKind::kExternal) descriptor_.kind = BackendKind::kExternal;
    }
  }

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  bool thread_safe() const override {
    return std::all_of(members_.begin(), members_.end(), [](const auto& m) { return m->thread_safe(); });
  }

  const std::vector<std::shared_ptr<Backend>>& members() const { return members_; }
  const std::optional<EnsembleWeights>& weights() const { return weights_; }

  std::vector<LogitVector> classify_sentences(std::span<const Sentence> batch) override {
    std::vector<std::vector<LogitVector>> per_member;
    for (auto& m : members_) per_member.push_back(comom::classify_sentence(*m, batch));
    return reduce(per_member);
  }

  std::vector<TagLogits> tag_sentences(std::span<const Sentence> batch) override {
    std::vector<std::vector<TagLogits>> per_member;
    for (auto& m : members_) per_member.push_back(comom::tag_tokens(*m, batch));
    return reduce(per_member);
  }

  std::vector<LogitVector> classify_quadruples(const Sentence& sentence,
                                               std::span<const Quadruple> quads) override {
    std::vector<std::vector<LogitVector>> per_member;
    for (auto& m : members_) per_member.push_back(comom::classify_quadruples(*m, sentence, quads));
    return reduce(per_member);
  }

 private:
  template <typename T>
  T reduce(const std::vector<T>& per_member) const {
    return weights_ ? combine_weighted(per_member, *weights_) : mean_logits(per_member);
  }

  BackendDescriptor descriptor_;
  std::vector<std::shared_ptr<Backend>> members_;
  std::optional<EnsembleWeights> weights_;
};

// ---------------------------------------------------------------------------
// Fold plans and bootstrap training.

struct FoldPlan {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::vector<std::string> ids;     // dataset order
  std::vector<std::size_t> fold_of; // parallel to ids

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t f : fold_of) ++sizes[f];
    return sizes;
  }

  std::vector<std::size_t> members_of(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      if (fold_of[i] == fold) out.push_back(i);
    }
    return out;
  }

  bool operator==(const FoldPlan&) const = default;
};

// Seeded shuffle of the sentence positions, then round-robin assignment, so
// fold sizes differ by at most one.
inline FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::kTooFewSamples, "bootstrapping needs k >= 2 folds");
  if (n < k) {
    fail(ErrorCode::kTooFewSamples,
         std::to_string(n) + " samples cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_of.assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) plan.fold_of[order[p]] = p % k;
  return plan;
}

inline FoldPlan make_folds(const Dataset& dataset, std::size_t k = 3, std::uint64_t seed = 0) {
  FoldPlan plan = make_folds(dataset.size(), k, seed);
  for (const Sentence& s : dataset.sentences) plan.ids.push_back(s.id);
  return plan;
}

struct ValidationMetrics {
  std::size_t sentences = 0;
  std::size_t examples = 0;
  double accuracy = 0.0;
  double loss = 0.0;
};

struct BootstrapMember {
  LinearModel model;
  std::size_t train_sentences = 0;
  ValidationMetrics validation;
};

struct BootstrapEnsemble {
  Task task = Task::kSentence;
  FoldPlan plan;
  std::vector<BootstrapMember> members;
  // Per dataset position: how often each sentence was trained on / validated.
  std::vector<std::size_t> train_count;
  std::vector<std::size_t> validate_count;

  std::shared_ptr<EnsembleBackend> backend(std::string name = "bootstrap") const {
    std::vector<std::shared_ptr<Backend>> backends;
    for (std::size_t i = 0; i < members.size(); ++i) {
      backends.push_back(std::make_shared<NativeBackend>(name + "-m" + std::to_string(i), members[i].model));
    }
    return std::make_shared<EnsembleBackend>(std::move(name), std::move(backends));
  }
};

inline ValidationMetrics validate_model(const LinearModel& model, const Dataset& held_out,
                                        const TrainConfig& config) {
  ValidationMetrics v;
  v.sentences = held_out.size();
  const ExampleSet set = build_examples(model.task(), held_out, config);
  std::vector<Example> flat;
  for (const auto& g : set.groups) flat.insert(flat.end(), g.begin(), g.end());
  v.examples = flat.size();
  if (flat.empty()) return v;
  std::size_t correct = 0;
  for (const Example& e : flat) correct += argmax(model.logits(e.features)) == e.label;
  v.accuracy = static_cast<double>(correct) / static_cast<double>(flat.size());
  v.loss = model.loss(flat);
  return v;
}

inline BootstrapEnsemble bootstrap_train(Task task, const Dataset& dataset, const FoldPlan& plan,
                                         const TrainConfig& config) {
  if (plan.fold_of.size() != dataset.size()) {
    fail(ErrorCode::kInvalidArgument, "fold plan covers " + std::to_string(plan.fold_of.size()) +
                                          " sentences, dataset has " + std::to_string(dataset.size()));
  }
  for (std::size_t i = 0; i < plan.ids.size() && i < dataset.size(); ++i) {
    if (plan.ids[i] != dataset.sentences[i].id) {
      fail(ErrorCode::kInvalidArgument, "fold plan does not match dataset order at '" +
                                            dataset.sentences[i].id + "'");
    }
  }
  BootstrapEnsemble out;
  out.task = task;
  out.plan = plan;
  out.train_count.assign(dataset.size(), 0);
  out.validate_count.assign(dataset.size(), 0);
  for (std::size_t member = 0; member < plan.k; ++member) {
    Dataset train;
    Dataset held_out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      if (plan.fold_of[i] == member) {
        held_out.sentences.push_back(dataset.sentences[i]);
        ++out.validate_count[i];
      } else {
        train.sentences.push_back(dataset.sentences[i]);
        ++out.train_count[i];
      }
    }
    BootstrapMember m;
    try {
      m.model = train_native(task, train, config).model;
    } catch (const Error& e) {
      fail(e.code(), "bootstrap member " + std::to_string(member) + ": " + e.detail());
    }
    m.train_sentences = train.size();
    m.validation = validate_model(m.model, held_out, config);
    out.members.push_back(std::move(m));
  }
  return out;
}

// Mean of the members' logits for one input (sentence batch, tagged batch or
// quadruple batch, depending on the ensemble's task).
inline std::vector<LogitVector> bootstrap_predict(const BootstrapEnsemble& ensemble,
                                                  std::span<const Sentence> batch) {
  auto backend = ensemble.backend();
  return classify_sentence(*backend, batch);
}

inline std::vector<TagLogits> bootstrap_predict_tags(const BootstrapEnsemble& ensemble,
                                                     std::span<const Sentence> batch) {
  auto backend = ensemble.backend();
  return tag_tokens(*backend, batch);
}

// ---------------------------------------------------------------------------
// Manifests.

inline nlohmann::ordered_json alphabet_json(Task task) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  switch (task) {
    case Task::kSentence:
      a.push_back("non-comparative");
      a.push_back("comparative");
      break;
    case Task::kTag:
      for (auto n : kTagNames) a.push_back(std::string(n));
      break;
    case Task::kQuadruple:
      for (std::size_t i = 0; i < kStageLabelCount; ++i) {
        a.push_back(std::string(stage_label_name(static_cast<StageLabel>(i))));
      }
      break;
  }
  return a;
}

// A manifest member is a native model file, a child-process adapter command
// or a TCP adapter address.
struct ManifestMember {
  std::optional<std::filesystem::path> model;
  std::optional<Transport> transport;
  std::string name;
  double weight = 1.0;
};

struct EnsembleManifest {
  Task task = Task::kSentence;
  bool weighted = false;
  std::vector<ManifestMember> members;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

inline nlohmann::ordered_json manifest_to_json(const EnsembleManifest& m) {
  nlohmann::ordered_json j;
  j["task"] = std::string(task_name(m.task));
  j["alphabet"] = alphabet_json(m.task);
  j["combine"] = m.weighted ? "weighted" : "mean";
  j["members"] = nlohmann::ordered_json::array();
  for (const auto& member : m.members) {
    nlohmann::ordered_json mj;
    if (!member.name.empty()) mj["name"] = member.name;
    if (member.model) mj["model"] = member.model->generic_string();
    if (member.transport) {
      if (const auto* c = std::get_if<ChildProcessTransport>(&*member.transport)) {
        mj["command"] = c->argv;
      } else {
        const auto& t = std::get<TcpTransport>(*member.transport);
        mj["tcp"] = t.host + ":" + std::to_string(t.port);
      }
    }
    mj["weight"] = member.weight;
    j["members"].push_back(std::move(mj));
  }
  for (const auto& [k, v] : m.extra.items()) j[k] = v;
  return j;
}

inline EnsembleManifest manifest_from_json(const nlohmann::json& j) {
  EnsembleManifest m;
  try {
    m.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("alphabet") && j["alphabet"] != alphabet_json(m.task)) {
      fail(ErrorCode::kTaskMismatch, "manifest alphabet does not match task '" +
                                         std::string(task_name(m.task)) + "'");
    }
    const std::string combine = j.value("combine", std::string("mean"));
    if (combine != "mean" && combine != "weighted") {
      fail(ErrorCode::kInvalidArgument, "combine must be 'mean' or 'weighted'");
    }
    m.weighted = combine == "weighted";
    for (const auto& mj : j.at("members")) {
      ManifestMember member;
      member.name = mj.value("name", std::string());
      member.weight = mj.value("weight", 1.0);
      if (mj.contains("model")) {
        member.model = mj["model"].get<std::string>();
      } else if (mj.contains("command")) {
        member.transport = ChildProcessTransport{mj["command"].get<std::vector<std::string>>()};
      } else if (mj.contains("tcp")) {
        const std::string addr = mj["tcp"].get<std::string>();
        const auto colon = addr.rfind(':');
        if (colon == std::string::npos) fail(ErrorCode::kInvalidArgument, "tcp address needs host:port");
        member.transport = TcpTransport{addr.substr(0, colon),
                                        static_cast<std::uint16_t>(std::stoul(addr.substr(colon + 1)))};
      } else {
        fail(ErrorCode::kInvalidArgument, "manifest member needs 'model', 'command' or 'tcp'");
      }
      m.members.push_back(std::move(member));
    }
    // Anything else (fold audit, notes) is carried through untouched.
    for (const auto& [k, v] : j.items()) {
      if (k != "task" && k != "alphabet" && k != "combine" && k != "members") m.extra[k] = v;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("ensemble manifest: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorCode::kInvalidArgument, std::string("ensemble manifest: ") + e.what());
  }
  if (m.members.empty()) fail(ErrorCode::kInvalidArgument, "ensemble manifest lists no member");
  return m;
}

// Instantiates the manifest's members (loading models relative to `base_dir`,
// connecting adapters) into one backend.
inline std::shared_ptr<Backend> open_manifest(const EnsembleManifest& manifest,
                                              const std::filesystem::path& base_dir,
                                              ExternalOptions options = {}) {
  std::vector<std::shared_ptr<Backend>> backends;
  std::vector<double> weights;
  for (std::size_t i = 0; i < manifest.members.size(); ++i) {
    const auto& member = manifest.members[i];
    const std::string name = member.name.empty() ? "member" + std::to_string(i) : member.name;
    std::shared_ptr<Backend> b;
    if (member.model) {
      const auto path = member.model->is_absolute() ? *member.model : base_dir / *member.model;
      auto native = NativeBackend::from_file(path, name);
      if (!native->descriptor().has(manifest.task)) {
        fail(ErrorCode::kTaskMismatch, "model '" + path.string() + "' is not a " +
                                           std::string(task_name(manifest.task)) + " model");
      }
      b = native;
    } else {
      BackendDescriptor d;
      d.name = name;
      d.kind = BackendKind::kExternal;
      d.transport = member.transport;
      b = connect_external(d, options);
      if (!b->descriptor().has(manifest.task)) {
        fail(ErrorCode::kCapabilityMissing, "adapter '" + name + "' lacks " +
                                                std::string(capability_name(manifest.task)));
      }
    }
    backends.push_back(std::move(b));
    weights.push_back(member.weight);
  }
  if (manifest.weighted) {
    return std::make_shared<EnsembleBackend>("ensemble", std::move(backends),
                                             EnsembleWeights(std::move(weights)));
  }
  return std::make_shared<EnsembleBackend>("ensemble", std::move(backends));
}

inline EnsembleManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

inline std::shared_ptr<Backend> open_manifest(const std::filesystem::path& path,
                                              ExternalOptions options = {}) {
  return open_manifest(read_manifest(path), path.parent_path(), options);
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
  out << j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  if (!out) fail(ErrorCode::kIoError, "write failed for '" + path.string() + "'");
}

// Saves each member next to the manifest as <stem>.m<i>.model and writes a
// mean-combining manifest with the per-member validation metrics.
inline EnsembleManifest save_bootstrap(const BootstrapEnsemble& ensemble,
                                       const std::filesystem::path& manifest_path) {
  EnsembleManifest m;
  m.task = ensemble.task;
  m.weighted = false;
  nlohmann::ordered_json validation = nlohmann::ordered_json::array();
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    const std::string file = stem + ".m" + std::to_string(i) + ".model";
    ensemble.members[i].model.save(dir / file);
    ManifestMember member;
    member.model = file;
    member.name = stem + "-m" + std::to_string(i);
    member.weight = 1.0;
    m.members.push_back(member);
    const auto& v = ensemble.members[i].validation;
    nlohmann::ordered_json vj;
    vj["member"] = i;
    vj["train_sentences"] = ensemble.members[i].train_sentences;
    vj["validation_sentences"] = v.sentences;
    vj["validation_examples"] = v.examples;
    vj["accuracy"] = v.accuracy;
    vj["loss"] = v.loss;
    validation.push_back(std::move(vj));
  }
  m.extra["folds"] = ensemble.plan.k;
  m.extra["fold_seed"] = ensemble.plan.seed;
  m.extra["validation"] = std::move(validation);
  write_json_file(manifest_path, manifest_to_json(m));
  return m;
}

}  // namespace comom

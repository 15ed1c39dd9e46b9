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

// Command-line front end.
//
// Exit codes: 0 success, 1 lint findings or evaluation mismatch, 2 usage
// error, 3 runtime failure. Failures print one JSON object on stderr.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "comom/comom.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;
constexpr const char* kConfigEnv = "COMOM_CONFIG";

// Failure detected while interpreting flags or config values.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) comom::fail(comom::ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    comom::fail(comom::ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct Context {
  std::string config_path;  // global config file
  json global = json::object();
  std::optional<std::uint64_t> seed_flag;
  int verbosity = 0;

  std::uint64_t seed() const {
    if (seed_flag) return *seed_flag;
    return global.value("seed", std::uint64_t{0});
  }

  void load() {
    std::string path = config_path;
    if (path.empty()) {
      if (const char* env = std::getenv(kConfigEnv)) path = env;
    }
    if (path.empty()) return;
    global = read_json(path);
    if (!global.is_object()) throw UsageError("config file must hold a JSON object");
    config_path = path;
  }

  json section(const std::string& name) const {
    return global.contains(name) ? global[name] : json::object();
  }

  void log(const std::string& msg) const {
    if (verbosity > 0) std::cerr << msg << '\n';
  }
};

// Tool version, seed and a hash of the effective configuration.
ordered_json provenance(const std::string& command, std::uint64_t seed, const ordered_json& effective) {
  ordered_json p;
  p["tool"] = "comom";
  p["version"] = std::string(comom::kVersion);
  p["command"] = command;
  p["seed"] = seed;
  p["config_hash"] = hex64(comom::fnv1a64(effective.dump()));
  p["config"] = effective;
  return p;
}

void write_sidecar(const fs::path& out, const ordered_json& prov) {
  comom::write_json_file(fs::path(out.string() + ".provenance.json"), prov);
}

std::string provenance_line(const ordered_json& prov) {
  return "# comom " + prov["version"].get<std::string>() + " " + prov["command"].get<std::string>() +
         " seed=" + std::to_string(prov["seed"].get<std::uint64_t>()) +
         " config=" + prov["config_hash"].get<std::string>();
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

comom::Dataset load_dataset(const std::string& path, const std::string& format) {
  return comom::import_dataset(path, comom::parse_dataset_format(format));
}

// ---------------------------------------------------------------------------

int cmd_clean(const Context& ctx, const std::string& in, const std::string& out, const std::string& format,
              bool skip_invalid) {
  comom::ImportResult r = comom::read_dataset(fs::path(in), comom::parse_dataset_format(format));
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  if (!r.ok()) {
    if (!skip_invalid) comom::fail(comom::ErrorCode::kParseError, in + ": " + comom::describe_issues(r.issues));
    for (const auto& issue : r.issues) {
      std::cerr << "skipped line " << issue.line << ": " << issue.message << '\n';
    }
  }
  ordered_json eff;
  eff["input"] = in;
  eff["format"] = format;
  eff["skip_invalid"] = skip_invalid;
  const ordered_json prov = provenance("clean", ctx.seed(), eff);
  comom::export_dataset(r.dataset, out);
  write_sidecar(out, prov);
  ctx.log("wrote " + std::to_string(r.dataset.size()) + " sentences to " + out);
  return r.ok() ? kExitOk : kExitFindings;
}

int cmd_stats(const Context& ctx, const std::string& in, const std::string& format, bool as_json) {
  const comom::StatsReport stats = comom::dataset_stats(load_dataset(in, format));
  ordered_json eff;
  eff["input"] = in;
  eff["format"] = format;
  const ordered_json prov = provenance("stats", ctx.seed(), eff);
  if (as_json) {
    ordered_json j = comom::stats_report_to_json(stats);
    j["provenance"] = prov;
    print_json(j);
  } else {
    std::cout << provenance_line(prov) << '\n' << comom::stats_report_to_text(stats);
  }
  return kExitOk;
}

int cmd_lint(const Context& ctx, const std::string& in, const std::string& format, bool as_json,
             std::optional<std::size_t> max_predicate) {
  comom::LintConfig config;
  config.max_predicate_tokens =
      ctx.section("lint").value("max_predicate_tokens", config.max_predicate_tokens);
  if (max_predicate) config.max_predicate_tokens = *max_predicate;
  const comom::LintReport report = comom::lint_dataset(load_dataset(in, format), config);
  ordered_json eff;
  eff["input"] = in;
  eff["format"] = format;
  eff["max_predicate_tokens"] = config.max_predicate_tokens;
  const ordered_json prov = provenance("lint", ctx.seed(), eff);
  if (as_json) {
    ordered_json j = comom::lint_report_to_json(report);
    j["provenance"] = prov;
    print_json(j);
  } else {
    std::cout << provenance_line(prov) << '\n' << comom::lint_report_to_text(report);
  }
  return report.findings.empty() ? kExitOk : kExitFindings;
}

int cmd_augment(const Context& ctx, const std::string& in, const std::string& format, const std::string& spec_path,
                const std::string& wordlists, const std::string& out, bool synthetic_only,
                std::optional<std::uint64_t> seed_flag) {
  const comom::Dataset source = load_dataset(in, format);
  const json spec_json = read_json(spec_path);
  comom::AugmentSpec spec = comom::augment_spec_from_json(spec_json, &source);
  if (seed_flag) {
    spec.seed = *seed_flag;
  } else if (ctx.seed_flag) {
    spec.seed = *ctx.seed_flag;
  }
  comom::ElementDictionaries dicts = comom::build_dictionaries(source);
  if (!wordlists.empty()) dicts = comom::merge_wordlist_dir(std::move(dicts), wordlists);
  for (const auto& w : dicts.warnings) std::cerr << "warning: " << w << '\n';
  const comom::Dataset synthetic = comom::generate_dataset(source, dicts, spec);
  const std::string version = spec_json.value("version", std::string("augmented"));
  comom::Dataset result =
      synthetic_only ? synthetic : comom::combine_datasets(source, synthetic, version);
  ordered_json eff;
  eff["input"] = in;
  eff["spec"] = comom::augment_spec_to_json(spec);
  eff["wordlists"] = wordlists;
  eff["synthetic_only"] = synthetic_only;
  eff["version"] = version;
  const ordered_json prov = provenance("augment", spec.seed, eff);
  comom::export_dataset(result, out);
  write_sidecar(out, prov);
  ctx.log("wrote " + std::to_string(result.size()) + " sentences (" + std::to_string(synthetic.size()) +
          " synthetic) to " + out);
  return kExitOk;
}

int cmd_train(const Context& ctx, const std::string& task_name, const std::string& in, const std::string& format,
              const std::string& config_path, const std::string& out, std::size_t bootstrap,
              std::optional<std::uint64_t> fold_seed) {
  const comom::Task task = comom::parse_task(task_name);
  comom::TrainConfig config = comom::train_config_from_json(ctx.section("train"));
  if (!config_path.empty()) config = comom::train_config_from_json(read_json(config_path), config);
  if (ctx.seed_flag) config.seed = *ctx.seed_flag;
  const comom::Dataset data = load_dataset(in, format);
  ordered_json eff;
  eff["task"] = std::string(comom::task_name(task));
  eff["input"] = in;
  eff["train"] = comom::train_config_to_json(config);
  eff["bootstrap_folds"] = bootstrap;
  if (bootstrap > 0) {
    const std::uint64_t fs_seed = fold_seed.value_or(config.seed);
    eff["fold_seed"] = fs_seed;
    const comom::FoldPlan plan = comom::make_folds(data, bootstrap, fs_seed);
    const comom::BootstrapEnsemble ensemble = comom::bootstrap_train(task, data, plan, config);
    comom::save_bootstrap(ensemble, out);
    for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
      const auto& v = ensemble.members[i].validation;
      ctx.log("member " + std::to_string(i) + ": validation accuracy " + std::to_string(v.accuracy));
    }
  } else {
    const comom::NativeTrainResult result = comom::train_native(task, data, config);
    result.model.save(out);
    ctx.log("trained on " + std::to_string(result.examples) + " examples");
  }
  write_sidecar(out, provenance("train", config.seed, eff));
  return kExitOk;
}

int cmd_predict(const Context& ctx, const std::string& in, const std::string& format,
                const std::string& pipeline_path, const std::string& out, std::optional<std::size_t> workers,
                const std::string& report_path, std::optional<long> timeout_ms) {
  const comom::Dataset data = load_dataset(in, format);
  comom::PipelineDocument doc = comom::read_pipeline_document(pipeline_path);
  if (ctx.global.contains("workers")) doc.config.workers = ctx.global["workers"].get<std::size_t>();
  if (workers) doc.config.workers = *workers;
  comom::ExternalOptions options;
  long timeout = ctx.global.value("timeout_ms", 30000L);
  if (timeout_ms) timeout = *timeout_ms;
  options.timeout = comom::Millis(timeout);
  comom::PipelineBackends backends = comom::open_pipeline(doc, fs::path(pipeline_path).parent_path(), options);
  const fs::path partial = out + ".partial";
  const comom::PipelineResult result = comom::run_pipeline(data, doc.config, backends, partial);
  ordered_json eff;
  eff["input"] = in;
  eff["pipeline"] = read_json(pipeline_path);
  eff["effective"] = comom::pipeline_config_to_json(doc.config);
  const ordered_json prov = provenance("predict", ctx.seed(), eff);
  comom::export_dataset(result.predictions, out);
  write_sidecar(out, prov);
  ordered_json report = comom::run_report_to_json(result.report);
  report["provenance"] = prov;
  if (!report_path.empty()) {
    comom::write_json_file(report_path, report);
  } else {
    ctx.log(report.dump(2));
  }
  return kExitOk;
}

int cmd_eval(const Context& ctx, const std::string& gold_path, const std::string& pred_path,
             const std::string& format, bool as_json, const std::string& averaging,
             std::optional<double> fail_under) {
  const comom::Dataset gold = load_dataset(gold_path, format);
  const comom::Dataset pred = load_dataset(pred_path, format);
  std::string mode = ctx.global.value("averaging", std::string("skip-absent"));
  if (!averaging.empty()) mode = averaging;
  const comom::EvalReport report = comom::e_t5_macro(gold, pred, comom::parse_averaging(mode));
  ordered_json eff;
  eff["gold"] = gold_path;
  eff["predictions"] = pred_path;
  eff["averaging"] = mode;
  const ordered_json prov = provenance("eval", ctx.seed(), eff);
  if (as_json) {
    ordered_json j = comom::eval_report_to_json(report);
    j["provenance"] = prov;
    print_json(j);
  } else {
    std::cout << provenance_line(prov) << '\n' << comom::eval_report_to_text(report);
  }
  if (fail_under && report.macro.f1 < *fail_under) return kExitFindings;
  return kExitOk;
}

int cmd_experiment(const Context& ctx, const std::string& preset_name, const std::string& data_dir,
                   const std::string& out_dir, const std::string& config_path) {
  const comom::ExperimentPreset& preset = comom::experiment_preset(preset_name);
  comom::ExperimentConfig config;
  if (ctx.global.contains("experiment")) config = comom::experiment_config_from_json(ctx.global["experiment"], config);
  if (ctx.global.contains("train")) config.train = comom::train_config_from_json(ctx.global["train"], config.train);
  if (!config_path.empty()) config = comom::experiment_config_from_json(read_json(config_path), config);
  if (ctx.seed_flag) {
    config.train.seed = *ctx.seed_flag;
    config.split_seed = *ctx.seed_flag;
    config.fold_seed = *ctx.seed_flag;
  }
  const comom::ExperimentResult result = comom::run_experiment(preset, fs::path(data_dir), out_dir, config);
  ordered_json eff;
  eff["preset"] = comom::preset_to_json(preset);
  eff["data"] = data_dir;
  eff["experiment"] = comom::experiment_config_to_json(config);
  comom::write_json_file(fs::path(out_dir) / "provenance.json", provenance("experiment", config.train.seed, eff));
  std::cout << "# preset " << preset.name << " (dataset v" << preset.dataset_version
            << (preset.bootstrap ? ", bootstrap" : ", no bootstrap") << ", stage 1 "
            << comom::stage1_mode_name(preset.stage1_mode) << ")\n"
            << comom::eval_report_to_text(result.report);
  return kExitOk;
}

void print_error(const std::string& code, const std::string& message) {
  ordered_json j;
  j["error"] = code;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Comparative opinion mining toolkit"};
  app.require_subcommand(1);
  Context ctx;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", ctx.config_path,
                 std::string("global JSON config (default: $") + kConfigEnv + ")");
  app.add_option("--seed", seed, "seed overriding the config file");
  app.add_flag("-v,--verbose", ctx.verbosity, "progress messages on stderr");
  app.set_version_flag("--version", std::string(comom::kVersion));

  std::string format = "canonical-jsonl";
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "canonical-jsonl | vlsp-raw")->capture_default_str();
  };

  std::string in, out, second;
  bool as_json = false;

  auto* clean = app.add_subcommand("clean", "import and normalize a dataset, write canonical JSONL");
  bool skip_invalid = false;
  clean->add_option("in", in, "input dataset")->required();
  clean->add_option("out", out, "output JSONL")->required();
  clean->add_flag("--skip-invalid", skip_invalid, "drop invalid records instead of failing (exit 1)");
  add_format(clean);

  auto* stats = app.add_subcommand("stats", "dataset statistics");
  stats->add_option("in", in, "input dataset")->required();
  stats->add_flag("--json", as_json, "JSON output");
  add_format(stats);

  auto* lint = app.add_subcommand("lint", "annotation checks; exit 1 when anything is found");
  std::optional<std::size_t> max_predicate;
  lint->add_option("in", in, "input dataset")->required();
  lint->add_flag("--json", as_json, "JSON output");
  lint->add_option("--max-predicate", max_predicate, "longest acceptable predicate, in words");
  add_format(lint);

  auto* augment = app.add_subcommand("augment", "dictionary-substitution augmentation");
  std::string spec_path, wordlists;
  bool synthetic_only = false;
  std::optional<std::uint64_t> augment_seed;
  augment->add_option("in", in, "source dataset")->required();
  augment->add_option("--spec", spec_path, "augmentation spec JSON")->required();
  augment->add_option("--wordlists", wordlists, "directory of extra word lists");
  augment->add_option("-o,--out", out, "output JSONL")->required();
  augment->add_flag("--synthetic-only", synthetic_only, "write only the generated sentences");
  augment->add_option("--augment-seed", augment_seed, "seed overriding the spec");
  add_format(augment);

  auto* train = app.add_subcommand("train", "train a native model (or a bootstrap ensemble)");
  std::string task, train_config;
  std::size_t bootstrap = 0;
  std::optional<std::uint64_t> fold_seed;
  train->add_option("task", task, "sentence | tag | quadruple")->required();
  train->add_option("in", in, "training dataset")->required();
  train->add_option("--config", train_config, "training config JSON");
  train->add_option("-o,--out", out, "model file, or manifest with --bootstrap")->required();
  train->add_option("--bootstrap", bootstrap, "train K fold members and write a manifest");
  train->add_option("--fold-seed", fold_seed, "seed of the fold plan");
  add_format(train);

  auto* predict = app.add_subcommand("predict", "run the three-stage pipeline");
  std::string pipeline_path, report_path;
  std::optional<std::size_t> workers;
  std::optional<long> timeout_ms;
  predict->add_option("in", in, "input dataset")->required();
  predict->add_option("--pipeline", pipeline_path, "pipeline document")->required();
  predict->add_option("-o,--out", out, "predictions JSONL")->required();
  predict->add_option("--workers", workers, "sentences processed concurrently");
  predict->add_option("--report", report_path, "run report JSON");
  predict->add_option("--timeout-ms", timeout_ms, "adapter reply timeout");
  add_format(predict);

  auto* eval = app.add_subcommand("eval", "E-T5-MACRO scores of predictions against gold");
  std::string averaging;
  std::optional<double> fail_under;
  eval->add_option("gold", in, "gold dataset")->required();
  eval->add_option("pred", second, "predictions")->required();
  eval->add_flag("--json", as_json, "JSON output");
  eval->add_option("--averaging", averaging, "skip-absent | all-labels");
  eval->add_option("--fail-under", fail_under, "exit 1 when macro-F1 is below this value");
  add_format(eval);

  auto* experiment = app.add_subcommand("experiment", "run an experiment preset E1..E5");
  std::string preset, data_dir, experiment_config;
  experiment->add_option("preset", preset, "E1 | E2 | E3 | E4 | E5")->required();
  experiment->add_option("--data", data_dir, "directory holding v2.jsonl / v3.jsonl")->required();
  experiment->add_option("-o,--out", out, "output directory")->required();
  experiment->add_option("--config", experiment_config, "experiment config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return kExitUsage;
  }
  ctx.seed_flag = seed;

  try {
    ctx.load();
    if (clean->parsed()) return cmd_clean(ctx, in, out, format, skip_invalid);
    if (stats->parsed()) return cmd_stats(ctx, in, format, as_json);
    if (lint->parsed()) return cmd_lint(ctx, in, format, as_json, max_predicate);
    if (augment->parsed()) {
      return cmd_augment(ctx, in, format, spec_path, wordlists, out, synthetic_only, augment_seed);
    }
    if (train->parsed()) return cmd_train(ctx, task, in, format, train_config, out, bootstrap, fold_seed);
    if (predict->parsed()) {
      return cmd_predict(ctx, in, format, pipeline_path, out, workers, report_path, timeout_ms);
    }
    if (eval->parsed()) return cmd_eval(ctx, in, second, format, as_json, averaging, fail_under);
    if (experiment->parsed()) return cmd_experiment(ctx, preset, data_dir, out, experiment_config);
  } catch (const UsageError& e) {
    print_error("UsageError", e.what());
    return kExitUsage;
  } catch (const comom::Error& e) {
    print_error(std::string(comom::error_code_name(e.code())), e.detail());
    if (e.code() == comom::ErrorCode::kIdMismatch) return kExitFindings;
    return e.code() == comom::ErrorCode::kInvalidArgument ? kExitUsage : kExitRuntime;
  } catch (const json::exception& e) {
    print_error("InvalidArgument", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error("RuntimeError", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

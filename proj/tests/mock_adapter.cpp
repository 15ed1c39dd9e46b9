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

// Scripted adapter speaking the line protocol on stdin/stdout. Every answer is
// fixed by the command line, so tests can provoke each client-side path.

#include <chrono>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kTags = {"O",     "B-SUB", "I-SUB", "B-OBJ", "I-OBJ",
                                        "B-ASP", "I-ASP", "B-PRED", "I-PRED"};
const std::vector<std::string> kLabels = {"DIF", "EQL",  "SUP+", "SUP-", "SUP",
                                          "COM+", "COM-", "COM",  "NONE"};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ordered_json one_hot(const std::vector<std::string>& alphabet, const std::string& name) {
  ordered_json row = ordered_json::array();
  for (const auto& a : alphabet) row.push_back(a == name ? 1.0 : 0.0);
  return row;
}

void emit(const ordered_json& j) { std::cout << j.dump() << '\n' << std::flush; }

ordered_json error_reply(const ordered_json& id, const std::string& message) {
  ordered_json e;
  e["type"] = "error";
  e["id"] = id;
  e["message"] = message;
  return e;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scripted protocol adapter for tests"};
  std::string capabilities = "sentence-2way,token-9tag,quintuple-9label";
  std::string sentence = "0,1";
  std::string tags;
  std::string quad = "COM+";
  std::string bad_hello;
  std::string error_task;
  int delay_ms = 0;
  int garbage_after = -1;
  int exit_after = -1;
  bool short_rows = false;
  bool wrong_id = false;
  app.add_option("--capabilities", capabilities, "comma-separated capability names");
  app.add_option("--sentence", sentence, "sentence logits, comma-separated");
  app.add_option("--tags", tags, "tag sequence, comma-separated; missing positions are O");
  app.add_option("--quad", quad, "label returned one-hot for every quadruple");
  app.add_option("--bad-hello", bad_hello, "version | tagset | labelset | type | json | silent");
  app.add_option("--error-task", error_task, "answer this task with an error message");
  app.add_option("--delay-ms", delay_ms, "sleep before each reply");
  app.add_option("--garbage-after", garbage_after, "reply with invalid JSON after N replies");
  app.add_option("--exit-after", exit_after, "exit after N replies");
  app.add_flag("--short-rows", short_rows, "tag replies carry one row too few");
  app.add_flag("--wrong-id", wrong_id, "replies carry the wrong id");
  CLI11_PARSE(app, argc, argv);

  ordered_json hello;
  hello["type"] = "hello";
  hello["version"] = 1;
  hello["capabilities"] = split(capabilities, ',');
  hello["tagset"] = kTags;
  hello["labelset"] = kLabels;
  if (bad_hello == "version") hello["version"] = 2;
  if (bad_hello == "tagset") hello["tagset"] = std::vector<std::string>(kTags.begin(), kTags.end() - 1);
  if (bad_hello == "labelset") hello["labelset"] = std::vector<std::string>(kLabels.begin(), kLabels.end() - 1);
  if (bad_hello == "type") hello["type"] = "greeting";
  if (bad_hello == "json") {
    std::cout << "{hello" << '\n' << std::flush;
  } else if (bad_hello != "silent") {
    emit(hello);
  }

  std::vector<double> sentence_logits;
  for (const auto& v : split(sentence, ',')) sentence_logits.push_back(std::stod(v));
  const std::vector<std::string> tag_seq = split(tags, ',');

  int replies = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (exit_after >= 0 && replies >= exit_after) return 0;
    if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    if (garbage_after >= 0 && replies >= garbage_after) {
      std::cout << "this is not json" << '\n' << std::flush;
      ++replies;
      continue;
    }
    ++replies;
    ordered_json req;
    try {
      req = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      emit(error_reply(nullptr, "request is not valid JSON"));
      continue;
    }
    const ordered_json id = req.contains("id") ? req["id"] : ordered_json(nullptr);
    if (!req.is_object() || req.value("type", std::string()) != "request" || !req.contains("tokens") ||
        !req["tokens"].is_array()) {
      emit(error_reply(id, "malformed request"));
      continue;
    }
    const std::string task = req.value("task", std::string());
    if (task == error_task) {
      emit(error_reply(id, "scripted failure for task " + task));
      continue;
    }
    ordered_json reply;
    reply["type"] = "response";
    reply["id"] = wrong_id && id.is_number() ? ordered_json(id.get<long long>() + 1) : id;
    if (task == "sentence") {
      reply["logits"] = sentence_logits;
    } else if (task == "tag") {
      ordered_json rows = ordered_json::array();
      std::size_t n = req["tokens"].size();
      if (short_rows && n > 0) --n;
      for (std::size_t i = 0; i < n; ++i) rows.push_back(one_hot(kTags, i < tag_seq.size() ? tag_seq[i] : "O"));
      reply["logits"] = rows;
    } else if (task == "quadruple") {
      reply["logits"] = one_hot(kLabels, quad);
    } else {
      emit(error_reply(id, "unknown task '" + task + "'"));
      continue;
    }
    emit(reply);
  }
  return 0;
}

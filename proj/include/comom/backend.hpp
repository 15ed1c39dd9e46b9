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

// Uniform classifier interface for the three sub-tasks. The free functions at
// the bottom are the public entry points: they check capabilities and enforce
// the output shape contract whichever implementation sits behind the handle.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "comom/core.hpp"
#include "comom/error.hpp"

namespace comom {

// A sub-task, doubling as the capability a backend advertises for it.
enum class Task : std::uint8_t {
  kSentence = 0,   // comparative vs not, 2 classes
  kTag = 1,        // per-word BIO tags, 9 classes
  kQuadruple = 2,  // comparison label or NONE, 9 classes
};

inline constexpr std::array<Task, 3> kTasks = {Task::kSentence, Task::kTag, Task::kQuadruple};

inline constexpr std::string_view task_name(Task task) {
  switch (task) {
    case Task::kSentence: return "sentence";
    case Task::kTag: return "tag";
    case Task::kQuadruple: return "quadruple";
  }
  return "?";
}

inline constexpr std::string_view capability_name(Task task) {
  switch (task) {
    case Task::kSentence: return "sentence-2way";
    case Task::kTag: return "token-9tag";
    case Task::kQuadruple: return "quintuple-9label";
  }
  return "?";
}

// Accepts either the task name or the capability name.
inline std::optional<Task> try_parse_task(std::string_view text) {
  for (Task task : kTasks) {
    if (text == task_name(task) || text == capability_name(task)) return task;
  }
  return std::nullopt;
}

inline Task parse_task(std::string_view text) {
  if (auto task = try_parse_task(text)) return *task;
  fail(ErrorCode::kInvalidArgument, "unknown task '" + std::string(text) + "'");
}

inline constexpr std::size_t output_width(Task task) {
  return task == Task::kSentence ? kSentenceClassCount
                                 : (task == Task::kTag ? kTagCount : kStageLabelCount);
}

enum class BackendKind { kNative, kExternal };

struct ChildProcessTransport {
  std::vector<std::string> argv;
  bool operator==(const ChildProcessTransport&) const = default;
};

struct TcpTransport {
  std::string host;
  std::uint16_t port = 0;
  bool operator==(const TcpTransport&) const = default;
};

using Transport = std::variant<ChildProcessTransport, TcpTransport>;

struct BackendDescriptor {
  std::string name;
  std::set<Task> capabilities;
  BackendKind kind = BackendKind::kNative;
  std::optional<Transport> transport;

  bool has(Task task) const { return capabilities.count(task) != 0; }

  void validate() const {
    if (capabilities.empty()) {
      fail(ErrorCode::kInvalidArgument, "backend '" + name + "' advertises no capability");
    }
    if (kind == BackendKind::kExternal && !transport) {
      fail(ErrorCode::kInvalidArgument, "external backend '" + name + "' has no transport");
    }
  }
};

class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;

  // True when concurrent calls on one handle are safe.
  virtual bool thread_safe() const { return false; }

  virtual std::vector<LogitVector> classify_sentences(std::span<const Sentence> batch) = 0;
  virtual std::vector<TagLogits> tag_sentences(std::span<const Sentence> batch) = 0;
  virtual std::vector<LogitVector> classify_quadruples(const Sentence& sentence,
                                                       std::span<const Quadruple> quads) = 0;
};

namespace detail {

inline void require(const Backend& backend, Task task) {
  if (!backend.descriptor().has(task)) {
    fail(ErrorCode::kCapabilityMissing, "backend '" + backend.descriptor().name + "' lacks " +
                                            std::string(capability_name(task)));
  }
}

inline void check_row(const LogitVector& row, std::size_t width, const std::string& where) {
  if (row.size() != width) {
    fail(ErrorCode::kAlignmentError, where + ": expected " + std::to_string(width) +
                                         " scores, got " + std::to_string(row.size()));
  }
  for (double v : row) {
    if (!std::isfinite(v)) fail(ErrorCode::kProtocolError, where + ": non-finite score");
  }
}

}  // namespace detail

// One width-2 logit pair per sentence, in batch order; class 1 = comparative.
inline std::vector<LogitVector> classify_sentence(Backend& backend,
                                                  std::span<const Sentence> batch) {
  detail::require(backend, Task::kSentence);
  if (batch.empty()) return {};
  auto out = backend.classify_sentences(batch);
  if (out.size() != batch.size()) {
    fail(ErrorCode::kAlignmentError, "backend returned " + std::to_string(out.size()) +
                                         " results for " + std::to_string(batch.size()) +
                                         " sentences");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    detail::check_row(out[i], kSentenceClassCount, "sentence '" + batch[i].id + "'");
  }
  return out;
}

// One width-9 row per ingest-tokenizer word, for each sentence.
inline std::vector<TagLogits> tag_tokens(Backend& backend, std::span<const Sentence> batch) {
  detail::require(backend, Task::kTag);
  if (batch.empty()) return {};
  auto out = backend.tag_sentences(batch);
  if (out.size() != batch.size()) {
    fail(ErrorCode::kAlignmentError, "backend returned " + std::to_string(out.size()) +
                                         " results for " + std::to_string(batch.size()) +
                                         " sentences");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::string where = "sentence '" + batch[i].id + "'";
    if (out[i].size() != batch[i].size()) {
      fail(ErrorCode::kAlignmentError, where + ": " + std::to_string(out[i].size()) +
                                           " tag rows for " + std::to_string(batch[i].size()) +
                                           " words");
    }
    for (const auto& row : out[i]) detail::check_row(row, kTagCount, where);
  }
  return out;
}

// Width-9 logits over the eight labels followed by NONE, one row per quad.
inline std::vector<LogitVector> classify_quadruples(Backend& backend, const Sentence& sentence,
                                                    std::span<const Quadruple> quads) {
  detail::require(backend, Task::kQuadruple);
  for (const Quadruple& q : quads) {
    try {
      validate_slots(q, sentence.size());
    } catch (const Error& e) {
      fail(ErrorCode::kInvalidArgument, "sentence '" + sentence.id + "': " + e.detail());
    }
  }
  if (quads.empty()) return {};
  auto out = backend.classify_quadruples(sentence, quads);
  if (out.size() != quads.size()) {
    fail(ErrorCode::kAlignmentError, "backend returned " + std::to_string(out.size()) +
                                         " results for " + std::to_string(quads.size()) +
                                         " quadruples");
  }
  for (const auto& row : out) detail::check_row(row, kStageLabelCount, "sentence '" + sentence.id + "'");
  return out;
}

inline LogitVector classify_quadruple(Backend& backend, const Sentence& sentence,
                                      const Quadruple& quad) {
  return classify_quadruples(backend, sentence, std::span<const Quadruple>(&quad, 1)).front();
}

}  // namespace comom

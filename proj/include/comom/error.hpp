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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace comom {

// Every failure raised by the library carries one of these codes so callers
// (and the CLI's machine-readable error output) can dispatch without parsing
// messages.
enum class ErrorCode {
  kUnknownLabel,
  kOverlappingElements,
  kInvalidSpan,
  kInvalidArgument,
  kParseError,
  kSpanRemapError,
  kIoError,
  kEmptyCorpus,
  kMissingLabel,
  kSlotUnavailable,
  kTargetUnreachable,
  kCapabilityMissing,
  kBackendUnavailable,
  kAlignmentError,
  kHandshakeFailure,
  kTimeout,
  kProtocolError,
  kRemoteError,
  kEmptyTrainingSet,
  kTaskMismatch,
  kModelFormatError,
  kShapeMismatch,
  kWeightCountMismatch,
  kTooFewSamples,
  kAllSetsEmpty,
  kIdMismatch,
  kMissingDatasetVersion,
};

inline constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kOverlappingElements: return "OverlappingElements";
    case ErrorCode::kInvalidSpan: return "InvalidSpan";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kSpanRemapError: return "SpanRemapError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kSlotUnavailable: return "SlotUnavailable";
    case ErrorCode::kTargetUnreachable: return "TargetUnreachable";
    case ErrorCode::kCapabilityMissing: return "CapabilityMissing";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kAlignmentError: return "AlignmentError";
    case ErrorCode::kHandshakeFailure: return "HandshakeFailure";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kRemoteError: return "RemoteError";
    case ErrorCode::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::kTaskMismatch: return "TaskMismatch";
    case ErrorCode::kModelFormatError: return "ModelFormatError";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kWeightCountMismatch: return "WeightCountMismatch";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kAllSetsEmpty: return "AllSetsEmpty";
    case ErrorCode::kIdMismatch: return "IdMismatch";
    case ErrorCode::kMissingDatasetVersion: return "MissingDatasetVersion";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace comom

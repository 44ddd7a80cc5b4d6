// Copyright 2026 The PrivRecourse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
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

namespace privrecourse {

enum class ErrorCode {
  kSchemaMismatch,
  kParseError,
  kUnknownCategory,
  kDegenerateBounds,
  kInvalidEncoding,
  kInsufficientData,
  kInvalidBudget,
  kEmptyCandidates,
  kInvalidUtility,
  kBudgetExceeded,
  kDegenerateLabels,
  kInvalidRegularizer,
  kDimensionError,
  kTooManyClusters,
  kEmptySupport,
  kNoStartNode,
  kNoCandidates,
  kNoRecourse,
  kNotACounterfactual,
  kStageDependencyError,
  kInvalidArgument,
  kIoError,
};

inline constexpr std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kDegenerateBounds: return "DegenerateBounds";
    case ErrorCode::kInvalidEncoding: return "InvalidEncoding";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kInvalidBudget: return "InvalidBudget";
    case ErrorCode::kEmptyCandidates: return "EmptyCandidates";
    case ErrorCode::kInvalidUtility: return "InvalidUtility";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kDegenerateLabels: return "DegenerateLabels";
    case ErrorCode::kInvalidRegularizer: return "InvalidRegularizer";
    case ErrorCode::kDimensionError: return "DimensionError";
    case ErrorCode::kTooManyClusters: return "TooManyClusters";
    case ErrorCode::kEmptySupport: return "EmptySupport";
    case ErrorCode::kNoStartNode: return "NoStartNode";
    case ErrorCode::kNoCandidates: return "NoCandidates";
    case ErrorCode::kNoRecourse: return "NoRecourse";
    case ErrorCode::kNotACounterfactual: return "NotACounterfactual";
    case ErrorCode::kStageDependencyError: return "StageDependencyError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return ErrorCodeName(code_); }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace privrecourse

// Copyright 2026 The ASG Authors.
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

namespace asg {

enum class ErrorCode {
  kFileNotFound,
  kMalformedJson,
  kMalformedRecord,
  kInvalidLexicon,
  kSizeMismatch,
  kDanglingTarget,
  kDanglingSource,
  kDuplicateRule,
  kDuplicateTerm,
  kInvalidRule,
  kMalformedBox,
  kUnknownClass,
  kTermNotFound,
  kZeroVector,
  kNonPositiveTemperature,
  kAlphaOutOfRange,
  kNonFiniteComponent,
  kDimensionMismatch,
  kLengthMismatch,
  kInvalidArgument,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kMalformedJson: return "MalformedJson";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kInvalidLexicon: return "InvalidLexicon";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kDanglingTarget: return "DanglingTarget";
    case ErrorCode::kDanglingSource: return "DanglingSource";
    case ErrorCode::kDuplicateRule: return "DuplicateRule";
    case ErrorCode::kDuplicateTerm: return "DuplicateTerm";
    case ErrorCode::kInvalidRule: return "InvalidRule";
    case ErrorCode::kMalformedBox: return "MalformedBox";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kTermNotFound: return "TermNotFound";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNonPositiveTemperature: return "NonPositiveTemperature";
    case ErrorCode::kAlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::kNonFiniteComponent: return "NonFiniteComponent";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// All library failures are reported as asg::Error. `subject()` names the
// offending term, file or line so callers can emit a machine-readable record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string subject = {})
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace asg

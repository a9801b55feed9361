//
// Copyright 2026 The RAPID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#ifndef RAPID_ERROR_HPP_
#define RAPID_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rapid {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  // dataset
  kMalformedCsv,
  kUnknownLevel,
  kEmptyFile,
  kInvalidK,
  kUnknownColumn,
  // learners
  kDegenerateTarget,
  kEmptyTraining,
  kSchemaMismatch,
  // risk
  kEmptyColumn,
  kLengthMismatch,
  kClassNotInBaseline,
  kIncompatibleKinds,
  kEmptyTargetSet,
  kMixedConfigurations,
  // uncertainty
  kTooFewReplicates,
  kInvalidCounts,
  // calibration
  kEmptyInput,
  kTooFewPermutations,
  // synthesizer
  kTooFewRows,
  kSynthesizerFailure,
  // simgen
  kNegativeKappa,
  kEmptyGrid,
  // attribution
  kMissingBinSpec,
  kDegenerateFlags,
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMalformedCsv: return "MalformedCsv";
    case ErrorCode::kUnknownLevel: return "UnknownLevel";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kUnknownColumn: return "UnknownColumn";
    case ErrorCode::kDegenerateTarget: return "DegenerateTarget";
    case ErrorCode::kEmptyTraining: return "EmptyTraining";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kEmptyColumn: return "EmptyColumn";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kClassNotInBaseline: return "ClassNotInBaseline";
    case ErrorCode::kIncompatibleKinds: return "IncompatibleKinds";
    case ErrorCode::kEmptyTargetSet: return "EmptyTargetSet";
    case ErrorCode::kMixedConfigurations: return "MixedConfigurations";
    case ErrorCode::kTooFewReplicates: return "TooFewReplicates";
    case ErrorCode::kInvalidCounts: return "InvalidCounts";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooFewPermutations: return "TooFewPermutations";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kSynthesizerFailure: return "SynthesizerFailure";
    case ErrorCode::kNegativeKappa: return "NegativeKappa";
    case ErrorCode::kEmptyGrid: return "EmptyGrid";
    case ErrorCode::kMissingBinSpec: return "MissingBinSpec";
    case ErrorCode::kDegenerateFlags: return "DegenerateFlags";
  }
  return "Unknown";
}

// All library failures surface as rapid::Error; code() identifies the
// precondition or data problem that was hit.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rapid

#endif  // RAPID_ERROR_HPP_

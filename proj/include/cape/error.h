//
// Copyright 2026 The CAPE-DP Authors
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

#ifndef CAPE_ERROR_H_
#define CAPE_ERROR_H_

#include <stdexcept>
#include <string>

namespace cape {

enum class ErrorCode {
  kParameter,
  kProtocolAssumption,
  kCalibrationInfeasible,
  kRange,
  kInsufficientShares,
  kDropoutThreshold,
  kDimensionMismatch,
  kBoundViolation,
  kDivergence,
  kData,
};

const char* ErrorCodeName(ErrorCode code);

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParameter:
      return "parameter error";
    case ErrorCode::kProtocolAssumption:
      return "protocol-assumption error";
    case ErrorCode::kCalibrationInfeasible:
      return "calibration infeasible";
    case ErrorCode::kRange:
      return "range error";
    case ErrorCode::kInsufficientShares:
      return "insufficient shares";
    case ErrorCode::kDropoutThreshold:
      return "dropout-threshold error";
    case ErrorCode::kDimensionMismatch:
      return "dimension mismatch";
    case ErrorCode::kBoundViolation:
      return "bound violation";
    case ErrorCode::kDivergence:
      return "divergence";
    case ErrorCode::kData:
      return "data error";
  }
  return "error";
}

}  // namespace cape

#endif  // CAPE_ERROR_H_

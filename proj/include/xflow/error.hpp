/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <stdexcept>
#include <string>

namespace xflow {

enum class ErrorCode {
  kSchema,
  kInvalidPlan,
  kInvalidArgument,
  kUncoverableOperator,
  kCyclicMapping,
  kMissingSourceStats,
  kUnknownCostFunction,
  kInsufficientLogs,
  kNoConversionTree,
  kInstanceTooLarge,
  kOverlappingScopes,
  kNoExecutableFullPlan,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries a code so the CLI can map it
/// to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Infeasibility (no plan, no tree) as opposed to malformed input.
  bool infeasible() const noexcept {
    return code_ == ErrorCode::kNoConversionTree || code_ == ErrorCode::kNoExecutableFullPlan ||
           code_ == ErrorCode::kUncoverableOperator;
  }

 private:
  ErrorCode code_;
};

}  // namespace xflow

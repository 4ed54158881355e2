/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/interval.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "xflow/error.hpp"

namespace xflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchema: return "SchemaError";
    case ErrorCode::kInvalidPlan: return "InvalidPlan";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUncoverableOperator: return "UncoverableOperator";
    case ErrorCode::kCyclicMapping: return "CyclicMapping";
    case ErrorCode::kMissingSourceStats: return "MissingSourceStats";
    case ErrorCode::kUnknownCostFunction: return "UnknownCostFunction";
    case ErrorCode::kInsufficientLogs: return "InsufficientLogs";
    case ErrorCode::kNoConversionTree: return "NoConversionTree";
    case ErrorCode::kInstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::kOverlappingScopes: return "OverlappingScopes";
    case ErrorCode::kNoExecutableFullPlan: return "NoExecutableFullPlan";
  }
  return "Error";
}

double IntervalEstimate::width_ratio() const {
  if (low > 0.0) return high / low;
  return high > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

void IntervalEstimate::check() const {
  if (!(low >= 0.0) || !(high >= low) || !(confidence > 0.0) || !(confidence <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "malformed interval estimate " + to_string(*this));
  }
}

IntervalEstimate operator+(const IntervalEstimate& a, const IntervalEstimate& b) {
  return {a.low + b.low, a.high + b.high, std::min(a.confidence, b.confidence)};
}

IntervalEstimate operator*(const IntervalEstimate& a, const IntervalEstimate& b) {
  return {a.low * b.low, a.high * b.high, std::min(a.confidence, b.confidence)};
}

IntervalEstimate scale(const IntervalEstimate& a, double factor) {
  return {a.low * factor, a.high * factor, a.confidence};
}

IntervalEstimate with_confidence(IntervalEstimate a, double confidence) {
  a.confidence = std::min(a.confidence, confidence);
  return a;
}

std::partial_ordering compare_costs(const IntervalEstimate& a, const IntervalEstimate& b) {
  if (auto c = a.midpoint() <=> b.midpoint(); c != 0) return c;
  return a.low <=> b.low;
}

std::string to_string(const IntervalEstimate& e) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << e.low << ", " << e.high << "]@" << e.confidence;
  return os.str();
}

}  // namespace xflow

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <compare>
#include <string>

namespace xflow {

/// A value range with the probability that the true value lies inside it.
/// Used for cardinalities as well as costs. Endpoints are nonnegative.
struct IntervalEstimate {
  double low = 0.0;
  double high = 0.0;
  double confidence = 1.0;

  static IntervalEstimate exact(double value) { return {value, value, 1.0}; }

  double midpoint() const { return 0.5 * (low + high); }
  double width_ratio() const;  // high / low, +inf for [0, x>0]
  bool contains(double value) const { return value >= low && value <= high; }

  /// Throws kInvalidArgument unless 0 <= low <= high and confidence in (0, 1].
  void check() const;

  bool operator==(const IntervalEstimate&) const = default;
};

// Endpoint-wise arithmetic for nonnegative quantities; confidence is the
// minimum of the operands.
IntervalEstimate operator+(const IntervalEstimate& a, const IntervalEstimate& b);
IntervalEstimate operator*(const IntervalEstimate& a, const IntervalEstimate& b);
IntervalEstimate scale(const IntervalEstimate& a, double factor);
IntervalEstimate with_confidence(IntervalEstimate a, double confidence);

/// Total order used wherever interval costs are ranked: midpoint first, then
/// the low endpoint. Callers break remaining ties on a canonical id.
std::partial_ordering compare_costs(const IntervalEstimate& a, const IntervalEstimate& b);

std::string to_string(const IntervalEstimate& e);

}  // namespace xflow

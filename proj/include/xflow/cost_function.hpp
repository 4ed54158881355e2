/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <array>
#include <string_view>

#include "xflow/interval.hpp"

namespace xflow {

enum class Resource { kCpu = 0, kMem = 1, kDisk = 2, kNet = 3 };
inline constexpr std::array<std::string_view, 4> kResourceNames = {"cpu", "mem", "disk", "net"};

/// r(c) = alpha * c + beta, in resource units (cycles, bytes, ...).
struct AffineCost {
  double alpha = 0.0;
  double beta = 0.0;

  double at(double cardinality) const { return alpha * cardinality + beta; }
  bool operator==(const AffineCost&) const = default;
};

/// Cost per resource unit on one platform.
using UnitCosts = std::array<double, 4>;
inline constexpr UnitCosts kUnitCostsOne = {1.0, 1.0, 1.0, 1.0};

/// Resource utilization functions of one execution operator. Resources left at
/// zero contribute nothing.
struct CostFunction {
  std::array<AffineCost, 4> resources{};

  AffineCost& operator[](Resource r) { return resources[static_cast<int>(r)]; }
  const AffineCost& operator[](Resource r) const { return resources[static_cast<int>(r)]; }

  /// sum_r r(c) * u_r, evaluated at both endpoints; confidence is inherited.
  IntervalEstimate evaluate(const IntervalEstimate& cardinality, const UnitCosts& units) const {
    IntervalEstimate out{0.0, 0.0, cardinality.confidence};
    for (std::size_t r = 0; r < resources.size(); ++r) {
      out.low += resources[r].at(cardinality.low) * units[r];
      out.high += resources[r].at(cardinality.high) * units[r];
    }
    return out;
  }

  bool operator==(const CostFunction&) const = default;
};

}  // namespace xflow

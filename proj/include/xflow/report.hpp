/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>

#include "xflow/ccg.hpp"
#include "xflow/enumeration.hpp"

namespace xflow {

/// Fifteen significant digits.
std::string format_number(double v);

/// Human readable plan: total cost, platforms, operators and data movement.
std::string format_plan(const ExecutionPlan& plan);

/// Phase timings and the operators / movement / startup cost breakdown. With
/// omit_timings the timing values are printed as "-".
std::string format_explain(const ExecutionPlan& plan, const PhaseTimings& timings, bool omit_timings = false);

std::string format_tree(const ConversionTree& tree, const ChannelConversionGraph& ccg);

}  // namespace xflow

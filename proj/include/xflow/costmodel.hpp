/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <string>
#include <string_view>

#include "xflow/catalog.hpp"
#include "xflow/ccg.hpp"
#include "xflow/cost_function.hpp"
#include "xflow/interval.hpp"
#include "xflow/mappings.hpp"

namespace xflow {

/// Output cardinality of every source operator, keyed by operator id.
using SourceStats = std::map<std::string, IntervalEstimate, std::less<>>;

/// Output cardinalities that replace the estimator's result for an operator
/// (all output slots), e.g. values observed at run time.
using CardinalityOverrides = std::map<std::string, IntervalEstimate, std::less<>>;

/// Selectivities assumed when an operator carries no hint.
inline constexpr double kDefaultFilterSelectivity = 0.5;
inline constexpr double kDefaultJoinSelectivity = 1.0;
inline constexpr double kDefaultFlatMapSelectivity = 1.0;
inline constexpr double kDefaultHintConfidence = 0.5;

/// {"src": {"low": 10, "high": 20, "confidence": 0.9}, ...}; a plain number
/// means an exact estimate.
SourceStats parse_source_stats(std::string_view text);
SourceStats load_source_stats(const std::string& path);

/// Output interval of one operator from its (non-feedback) input intervals.
IntervalEstimate estimate_output(const Operator& op, const std::vector<IntervalEstimate>& inputs);

/// Fills input_cardinality and output_cardinality in topological order.
/// Throws kMissingSourceStats for a source without stats.
void estimate_cardinalities(InflatedPlan& plan, const SourceStats& stats,
                            const CardinalityOverrides& overrides = {});

IntervalEstimate operator_cost(const CostFunction& fn, const IntervalEstimate& c_in, const PlatformProfile& profile);

/// Throws kUnknownCostFunction when the operator's cost reference is unknown.
IntervalEstimate operator_cost(const ExecutionOperator& op, const PlatformCatalog& catalog,
                               const IntervalEstimate& c_in);

/// Costs every alternative: its member operators at the operator's input
/// cardinality plus the conversions linking consecutive chain members, scaled
/// by the loop multiplier. An alternative whose chain cannot be linked is
/// marked infeasible.
void annotate_costs(InflatedPlan& plan, const PlatformCatalog& catalog, const ChannelConversionGraph& ccg);

/// ((|t - t_est| + s) / (t + s))^2. Throws kInvalidArgument unless s > 0.
double relative_loss(double t, double t_est, double s = 1.0);

}  // namespace xflow

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xflow/interval.hpp"
#include "xflow/plan.hpp"

namespace xflow {

class PlatformCatalog;

struct PatternNode {
  std::string kind;
  std::optional<bool> has_selectivity;  // presence/absence of the hint
  std::optional<bool> has_udf;
};

/// Connected operator pattern. Edges are (producer, consumer) pattern-node
/// indices and match any non-feedback edge between the bound operators.
struct GraphPattern {
  std::vector<PatternNode> nodes;
  std::vector<std::pair<int, int>> edges;
};

/// One element of a substitute chain: either an execution operator id or a
/// platform-agnostic kind that is inflated further.
struct SubstituteStep {
  std::string exec_op;
  std::string kind;
};

struct OperatorMapping {
  std::string id;
  GraphPattern pattern;
  std::vector<SubstituteStep> substitute;  // linear chain, first step takes all inputs
};

/// Node-id bindings, one per pattern node, in pattern order.
using Match = std::vector<std::string>;

/// All subgraph isomorphisms of `pattern` into `plan`, in deterministic order.
/// Throws kInvalidArgument for an empty or disconnected pattern.
std::vector<Match> match(const GraphPattern& pattern, const RheemPlan& plan);

/// One executable substitute of an inflated operator: a chain of execution
/// operators plus the structural data the optimizer needs from the catalog.
struct Alternative {
  std::vector<std::string> ops;  // execution operator ids in chain order
  std::vector<std::string> via;  // kinds visited through decompositions

  // Resolved from the catalog during inflation.
  std::vector<int> op_indices;
  std::uint64_t platforms = 0;                // bit per catalog platform
  std::vector<std::vector<int>> input_sets;   // accepted channels per input slot
  std::vector<int> output_channels;           // produced channel per output slot

  // Filled by annotate_costs.
  IntervalEstimate cost;
  double scalar = 0.0;
  bool feasible = true;

  std::string label() const;
};

struct InflatedOperator {
  int index = 0;           // operator index in the plan
  std::string id;
  std::string kind;        // retained original
  int inputs = 0;
  int outputs = 0;
  std::vector<Alternative> alternatives;
};

/// The plan with every operator replaced by its alternatives, plus the
/// cardinality/cost annotations added by the cost model.
struct InflatedPlan {
  RheemPlan plan;
  std::vector<InflatedOperator> ops;  // same indices as plan operators

  std::vector<double> multiplier;                         // loop iteration factor
  std::vector<IntervalEstimate> input_cardinality;         // c_in per operator
  std::vector<std::vector<IntervalEstimate>> output_cardinality;
  bool costed = false;

  /// Number of execution plans denoted before data-movement choices.
  double denoted_plans() const;
};

/// Applies every mapping of the catalog to every operator. The result does not
/// depend on the order of the catalog's mappings. Throws kUncoverableOperator,
/// kCyclicMapping (decomposition deeper than 4), or kSchema for mappings whose
/// pattern spans several operators.
InflatedPlan inflate(const RheemPlan& plan, const PlatformCatalog& catalog);

inline constexpr int kMaxDecompositionDepth = 4;

/// Text form used to compare inflated plans.
std::string canonical_form(const InflatedPlan& plan);

}  // namespace xflow

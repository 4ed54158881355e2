/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "xflow/catalog.hpp"
#include "xflow/ccg.hpp"
#include "xflow/costmodel.hpp"
#include "xflow/interval.hpp"
#include "xflow/mappings.hpp"

namespace xflow {

struct PruneRule {
  enum class Kind { kLossless, kTopK, kNone };
  Kind kind = Kind::kLossless;
  int k = 1;

  static PruneRule lossless() { return {Kind::kLossless, 1}; }
  static PruneRule top_k(int k) { return {Kind::kTopK, k}; }
  static PruneRule none() { return {Kind::kNone, 1}; }
  std::string to_string() const;
};

/// Parses "lossless", "none", "topk:K". Throws kInvalidArgument.
PruneRule parse_prune_rule(const std::string& text);

inline constexpr std::uint16_t kNoChoice = 0xffff;

/// Partial assignment of alternatives to the operators of a scope.
struct Subplan {
  std::vector<std::uint16_t> choice;  // alternative per plan operator, kNoChoice outside the scope
  double cost = 0.0;                   // operators + resolved conversions, no start-up
  double low = 0.0;
  double high = 0.0;
  double confidence = 1.0;
  std::uint64_t platforms = 0;
};

struct Enumeration {
  std::vector<int> scope;  // sorted operator indices
  std::vector<Subplan> subplans;
};

/// Costs that change while a plan is executing: operators already run cost
/// nothing, conversions between executed operators are free, and platforms
/// already started add no start-up cost. Pinned operators keep their
/// alternative.
struct CostContext {
  std::vector<bool> executed;
  std::vector<int> pinned;  // alternative per operator, -1 when free
  std::uint64_t started_platforms = 0;
};

/// Data movement of one producer output slot in the final plan.
struct PlannedConversion {
  std::string producer;
  int slot = 0;
  std::string root_channel;
  std::vector<std::string> channels;                              // tree channels, sorted
  std::vector<std::string> edges;                                 // "from->to#conversion", sorted
  std::vector<std::pair<std::string, std::string>> consumers;     // (consumer id:slot, channel)
  IntervalEstimate cardinality;
  IntervalEstimate cost;
  double scalar = 0.0;
};

struct PlannedOperator {
  std::string id;
  std::string kind;
  std::string alternative;               // label of the chosen alternative
  std::vector<std::string> exec_ops;
  std::vector<std::string> via;
  std::vector<std::string> platforms;
  IntervalEstimate input_cardinality;
  IntervalEstimate cost;
  double scalar = 0.0;
};

struct CostBreakdown {
  double operators = 0.0;
  double movement = 0.0;
  double startup = 0.0;
  double total = 0.0;
};

struct EnumerationStats {
  std::size_t subplans_created = 0;
  std::size_t subplans_pruned = 0;
  std::size_t max_enumeration = 0;
  std::size_t join_groups = 0;
  std::size_t mct_queries = 0;
  double mct_seconds = 0.0;
};

struct ExecutionPlan {
  std::vector<PlannedOperator> operators;      // plan operator order
  std::vector<PlannedConversion> conversions;  // producer slot order
  std::vector<std::uint16_t> choice;
  std::vector<std::string> platforms;
  IntervalEstimate cost;
  CostBreakdown breakdown;
  EnumerationStats stats;
};

/// Everything enumeration needs about a costed inflated plan: producer slots,
/// interned target sets and a memo of conversion tree costs. All costs are
/// computed by slot in a fixed order, so every path to the same assignment
/// yields bit-identical totals.
class PlanSpace {
 public:
  PlanSpace(const InflatedPlan& plan, const PlatformCatalog& catalog, const ChannelConversionGraph& ccg,
            CostContext context = {});
  ~PlanSpace();
  PlanSpace(const PlanSpace&) = delete;
  PlanSpace& operator=(const PlanSpace&) = delete;

  const InflatedPlan& plan() const;
  std::size_t size() const;

  /// Feasible alternatives of an operator.
  const std::vector<std::uint16_t>& feasible(int op) const;

  /// Full-plan cost: operators, then conversions by slot, then start-up by
  /// platform index. nullopt when some conversion tree does not exist.
  std::optional<CostBreakdown> full_cost(const std::vector<std::uint16_t>& choice) const;
  std::optional<IntervalEstimate> full_interval(const std::vector<std::uint16_t>& choice) const;

  ExecutionPlan build(const std::vector<std::uint16_t>& choice) const;

  struct Impl;
  Impl& impl() const { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

/// Called for every subplan removed by pruning.
using PruneObserver = std::function<void(const std::vector<int>& scope, const Subplan& pruned)>;

struct EnumerateOptions {
  PruneRule rule = PruneRule::lossless();
  std::optional<std::uint64_t> shuffle_seed;  // process join groups in random order
  PruneObserver observer;
  std::size_t max_subplans = 5'000'000;       // per enumeration; kInstanceTooLarge beyond
};

Enumeration singleton(const PlanSpace& space, int op);
/// Throws kOverlappingScopes when the scopes intersect.
Enumeration join(const PlanSpace& space, const Enumeration& a, const Enumeration& b);
Enumeration prune(const PlanSpace& space, const Enumeration& e, const PruneRule& rule,
                  const PruneObserver& observer = {});

/// Operators of the scope that take part in a data movement leaving it.
std::vector<int> boundary_operators(const PlanSpace& space, const std::vector<int>& scope);

/// Join-group enumeration. Throws kNoExecutableFullPlan.
ExecutionPlan enumerate(const PlanSpace& space, const EnumerateOptions& options = {});

inline constexpr double kExhaustiveLimit = 1e6;

struct ExhaustiveResult {
  ExecutionPlan plan;
  std::vector<std::vector<std::uint16_t>> optima;  // every optimal assignment
  std::size_t evaluated = 0;
};

/// Evaluates every denoted plan. Throws kInstanceTooLarge beyond
/// kExhaustiveLimit plans, kNoExecutableFullPlan if none is executable.
ExhaustiveResult exhaustive_enumerate(const PlanSpace& space, bool collect_optima = false);

struct PhaseTimings {
  double inflation_ms = 0.0;
  double cardinality_ms = 0.0;
  double mct_ms = 0.0;
  double enumeration_ms = 0.0;
};

struct OptimizeOptions {
  EnumerateOptions enumerate;
  CardinalityOverrides overrides;
  CostContext context;
  bool exhaustive = false;
};

struct Optimization {
  InflatedPlan inflated;
  ExecutionPlan plan;
  PhaseTimings timings;
};

/// inflate -> estimate_cardinalities -> annotate_costs -> enumerate.
Optimization optimize(const RheemPlan& plan, const PlatformCatalog& catalog, const SourceStats& stats,
                      const OptimizeOptions& options = {});

/// Same pipeline on an already inflated plan (cardinalities are re-estimated).
Optimization optimize_inflated(InflatedPlan inflated, const PlatformCatalog& catalog, const SourceStats& stats,
                               const OptimizeOptions& options = {});

}  // namespace xflow

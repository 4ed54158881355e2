/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xflow/enumeration.hpp"

namespace xflow {

struct CheckpointThresholds {
  double min_confidence = 0.9;  // checkpoint below this confidence
  double max_width = 4.0;       // or above this high/low ratio
  double mismatch_ratio = 2.0;  // re-optimize beyond this factor off the midpoint
};

/// Pause point after a producer slot whose data passes through a reusable
/// (at-rest) channel.
struct Checkpoint {
  std::string producer;
  int slot = 0;
  std::string channel;
  std::string reason;
};

std::vector<Checkpoint> insert_checkpoints(const ExecutionPlan& plan, const ChannelConversionGraph& ccg,
                                           const CheckpointThresholds& thresholds = {});

/// True when `observed` lies outside `estimate` or further than `ratio` times
/// from its midpoint.
bool cardinality_mismatch(const IntervalEstimate& estimate, double observed, double ratio = 2.0);

/// Hidden ground truth for the simulator: source cardinalities and operator
/// selectivities. Operators without an entry behave as estimated.
struct TruthModel {
  std::map<std::string, double, std::less<>> sources;
  std::map<std::string, double, std::less<>> selectivities;
};

/// {"sources": {"id": n, ...}, "selectivities": {"id": s, ...}}
TruthModel parse_truth_model(std::string_view text);
TruthModel load_truth_model(const std::string& path);

/// Actual output cardinality of every operator (plan index order).
std::vector<double> true_cardinalities(const RheemPlan& plan, const SourceStats& stats, const TruthModel& truth);

struct Reoptimization {
  ExecutionPlan plan;
  double remaining_before = 0.0;  // continuing the current plan, updated cardinalities
  double remaining_after = 0.0;
  bool changed = false;
};

/// Re-plans the operators not yet executed. Executed operators keep their
/// alternative, their costs and the start-up of their platforms are sunk, and
/// `observed` replaces their output estimates. Keeps the current plan unless
/// the new one is strictly cheaper.
Reoptimization reoptimize(const RheemPlan& plan, const PlatformCatalog& catalog, const SourceStats& stats,
                          const ExecutionPlan& current, const std::vector<bool>& executed,
                          const CardinalityOverrides& observed, const OptimizeOptions& options = {});

struct TraceEvent {
  enum class Type { kExecute, kCheckpoint, kReoptimize };
  Type type = Type::kExecute;
  std::string op;
  std::string detail;
  IntervalEstimate estimated;
  double observed = 0.0;
  bool fired = false;
};

struct SimulationResult {
  ExecutionPlan initial;
  ExecutionPlan final_plan;
  std::vector<Checkpoint> checkpoints;  // of the initial plan
  std::vector<TraceEvent> trace;
  std::vector<Reoptimization> reoptimizations;
};

struct ProgressiveOptions {
  OptimizeOptions optimize;
  CheckpointThresholds thresholds;
  bool reoptimize = true;
};

/// Executes the optimized plan operator by operator against the truth model,
/// pausing at checkpoints and re-optimizing on mismatch.
SimulationResult simulate(const RheemPlan& plan, const PlatformCatalog& catalog, const SourceStats& stats,
                          const TruthModel& truth, const ProgressiveOptions& options = {});

std::string format_trace(const SimulationResult& result);

}  // namespace xflow

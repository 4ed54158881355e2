/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xflow/enumeration.hpp"
#include "xflow/topology.hpp"

namespace xflow {

/// A prune rule or the exhaustive oracle.
struct BenchStrategy {
  std::string name;  // lossless, topk:K, none, exhaustive
  PruneRule rule;
  bool exhaustive = false;
};

/// Throws kInvalidArgument on unknown names.
BenchStrategy parse_strategy(const std::string& name);

struct BenchConfig {
  std::vector<Topology> topologies{Topology::kPipeline};
  std::vector<int> sizes{10};
  std::vector<int> platforms{3};
  std::vector<BenchStrategy> strategies{parse_strategy("lossless")};
  std::vector<std::uint64_t> seeds{1};
  TopologyOptions topology;
};

struct BenchRow {
  std::string topology;
  int n = 0;
  int k = 0;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string status;  // ok, too-large, infeasible, invalid, error
  double time_ms = 0.0;
  double cost = 0.0;
  PhaseTimings phases;
};

/// One row per (topology, n, k, strategy, seed), in that nesting order.
std::vector<BenchRow> run_bench(const BenchConfig& config);
BenchRow run_bench_case(Topology topology, int n, int k, const BenchStrategy& strategy, std::uint64_t seed,
                        const TopologyOptions& options = {});

/// CSV with header
/// topology,n,k,prune,seed,status,time_ms,cost,inflation_ms,cardinality_ms,mct_ms,enumeration_ms.
/// With omit_timings the timing columns are left empty.
std::string bench_csv_header();
std::string bench_csv_row(const BenchRow& row, bool omit_timings = false);
std::string bench_csv(const std::vector<BenchRow>& rows, bool omit_timings = false);

}  // namespace xflow

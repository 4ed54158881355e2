/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/bench.hpp"

#include <chrono>
#include <cstdio>

#include "xflow/error.hpp"

namespace xflow {

BenchStrategy parse_strategy(const std::string& name) {
  if (name == "exhaustive") return {name, PruneRule::none(), true};
  PruneRule rule = parse_prune_rule(name);
  return {rule.to_string(), rule, false};
}

BenchRow run_bench_case(Topology topology, int n, int k, const BenchStrategy& strategy, std::uint64_t seed,
                        const TopologyOptions& options) {
  BenchRow row;
  row.topology = to_string(topology);
  row.n = n;
  row.k = k;
  row.strategy = strategy.name;
  row.seed = seed;
  try {
    SyntheticInstance inst = generate_topology(topology, n, k, seed, options);
    OptimizeOptions opts;
    opts.enumerate.rule = strategy.rule;
    opts.exhaustive = strategy.exhaustive;
    auto start = std::chrono::steady_clock::now();
    Optimization result = optimize(inst.plan, inst.catalog, inst.stats, opts);
    row.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    row.cost = result.plan.breakdown.total;
    row.phases = result.timings;
    row.status = "ok";
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kInstanceTooLarge: row.status = "too-large"; break;
      case ErrorCode::kInvalidArgument: row.status = "invalid"; break;
      default: row.status = e.infeasible() ? "infeasible" : "error"; break;
    }
  }
  return row;
}

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  std::vector<BenchRow> rows;
  for (Topology t : config.topologies) {
    for (int n : config.sizes) {
      for (int k : config.platforms) {
        for (const auto& s : config.strategies) {
          for (std::uint64_t seed : config.seeds) rows.push_back(run_bench_case(t, n, k, s, seed, config.topology));
        }
      }
    }
  }
  return rows;
}

std::string bench_csv_header() {
  return "topology,n,k,prune,seed,status,time_ms,cost,inflation_ms,cardinality_ms,mct_ms,enumeration_ms";
}

std::string bench_csv_row(const BenchRow& row, bool omit_timings) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto ms = [&](double v) {
    if (omit_timings) return std::string();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  const bool ok = row.status == "ok";
  std::string out = row.topology + "," + std::to_string(row.n) + "," + std::to_string(row.k) + "," + row.strategy +
                    "," + std::to_string(row.seed) + "," + row.status + ",";
  out += (ok ? ms(row.time_ms) : "") + "," + (ok ? num(row.cost) : "") + ",";
  out += (ok ? ms(row.phases.inflation_ms) : "") + "," + (ok ? ms(row.phases.cardinality_ms) : "") + ",";
  out += (ok ? ms(row.phases.mct_ms) : "") + "," + (ok ? ms(row.phases.enumeration_ms) : "");
  return out;
}

std::string bench_csv(const std::vector<BenchRow>& rows, bool omit_timings) {
  std::string out = bench_csv_header() + "\n";
  for (const auto& r : rows) out += bench_csv_row(r, omit_timings) + "\n";
  return out;
}

}  // namespace xflow

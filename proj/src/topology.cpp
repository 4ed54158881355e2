/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/topology.hpp"

#include <random>

#include "xflow/error.hpp"

namespace xflow {

Topology parse_topology(const std::string& name) {
  if (name == "pipeline") return Topology::kPipeline;
  if (name == "fanout") return Topology::kFanout;
  if (name == "tree") return Topology::kTree;
  throw Error(ErrorCode::kInvalidArgument, "unknown topology '" + name + "' (pipeline, fanout, tree)");
}

std::string to_string(Topology t) {
  switch (t) {
    case Topology::kPipeline: return "pipeline";
    case Topology::kFanout: return "fanout";
    case Topology::kTree: return "tree";
  }
  return "?";
}

namespace {

std::string pad(int i, int width) {
  std::string s = std::to_string(i);
  return std::string(width > static_cast<int>(s.size()) ? width - s.size() : 0, '0') + s;
}

std::vector<Operator> shape(Topology kind, int n, std::vector<Edge>& edges) {
  const int width = static_cast<int>(std::to_string(n).size());
  auto id = [&](int i) { return "o" + pad(i, width); };
  std::vector<Operator> ops;
  auto add = [&](int inputs, int outputs) {
    Operator op;
    op.id = id(static_cast<int>(ops.size()));
    op.kind = "Syn_" + op.id;
    op.inputs = inputs;
    op.outputs = outputs;
    ops.push_back(op);
  };
  switch (kind) {
    case Topology::kPipeline:
      if (n == 1) {
        add(0, 1);
        break;
      }
      add(0, 1);
      for (int i = 1; i + 1 < n; ++i) add(1, 1);
      add(1, 0);
      for (int i = 0; i + 1 < n; ++i) edges.push_back({id(i), 0, id(i + 1), 0, false});
      break;
    case Topology::kFanout:
      add(0, 1);
      for (int i = 1; i < n; ++i) {
        add(1, 0);
        edges.push_back({id(0), 0, id(i), 0, false});
      }
      break;
    case Topology::kTree: {
      if (((n + 1) & n) != 0) {
        throw Error(ErrorCode::kInvalidArgument, "tree topology needs n = 2^h - 1 operators, got " + std::to_string(n));
      }
      // Heap layout: node i has children 2i+1 and 2i+2; leaves are sources.
      const int internal = (n - 1) / 2;
      for (int i = 0; i < n; ++i) {
        if (i < internal) {
          add(2, 1);
        } else {
          add(0, 1);
        }
      }
      for (int i = 0; i < internal; ++i) {
        edges.push_back({id(2 * i + 1), 0, id(i), 0, false});
        edges.push_back({id(2 * i + 2), 0, id(i), 1, false});
      }
      break;
    }
  }
  return ops;
}

}  // namespace

SyntheticInstance generate_topology(Topology kind, int n, int k, std::uint64_t seed, const TopologyOptions& options) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "topology needs n >= 1");
  if (k < 1 || k > 64) throw Error(ErrorCode::kInvalidArgument, "topology needs 1 <= k <= 64");
  std::vector<Edge> edges;
  std::vector<Operator> ops = shape(kind, n, edges);

  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, std::max(lo, hi))(rng); };

  SyntheticInstance out;
  PlatformCatalog& cat = out.catalog;
  for (int p = 0; p < k; ++p) {
    const std::string pid = "P" + std::to_string(p);
    PlatformProfile profile;
    profile.id = pid;
    profile.startup = uniform(0, options.max_startup);
    cat.platforms.push_back(profile);
    cat.channels.push_back({pid + ".stream", false});
    cat.channels.push_back({pid + ".coll", true});
    cat.channels.push_back({pid + ".file", true});
  }
  auto constant_cost = [&](const std::string& ref, double value) {
    CostFunction fn;
    fn[Resource::kCpu].beta = value;
    cat.cost_functions[ref] = fn;
  };
  auto add_conversion = [&](const std::string& from, const std::string& to, const std::string& platform, int max) {
    Conversion conv;
    conv.id = from + "->" + to;
    conv.from = from;
    conv.to = to;
    conv.platform = platform;
    conv.cost_ref = "conv:" + conv.id;
    constant_cost(conv.cost_ref, uniform(1, max));
    cat.conversions.push_back(conv);
  };
  for (int p = 0; p < k; ++p) {
    const std::string pid = "P" + std::to_string(p);
    add_conversion(pid + ".stream", pid + ".coll", pid, options.max_conversion_cost);
    add_conversion(pid + ".coll", pid + ".stream", pid, options.max_conversion_cost);
    add_conversion(pid + ".coll", pid + ".file", pid, options.max_conversion_cost);
    add_conversion(pid + ".file", pid + ".coll", pid, options.max_conversion_cost);
  }
  for (int p = 0; p < k; ++p) {
    for (int q = 0; q < k; ++q) {
      if (p != q) {
        add_conversion("P" + std::to_string(p) + ".file", "P" + std::to_string(q) + ".coll", "", options.max_cross_cost);
      }
    }
  }
  for (const Operator& op : ops) {
    for (int p = 0; p < k; ++p) {
      const std::string pid = "P" + std::to_string(p);
      ExecutionOperator exec;
      exec.id = op.id + "@" + pid;
      exec.platform = pid;
      exec.implements = {op.kind};
      for (int s = 0; s < op.inputs; ++s) exec.input_channels.push_back({pid + ".stream", pid + ".coll"});
      for (int s = 0; s < op.outputs; ++s) exec.output_channels.push_back(pid + ".stream");
      exec.cost_ref = "op:" + exec.id;
      constant_cost(exec.cost_ref, uniform(options.min_operator_cost, options.max_operator_cost));
      cat.operators.push_back(exec);

      OperatorMapping mapping;
      mapping.id = op.kind + "->" + exec.id;
      mapping.pattern.nodes.push_back({op.kind, std::nullopt, std::nullopt});
      mapping.substitute.push_back({exec.id, ""});
      cat.mappings.push_back(mapping);
    }
    if (op.is_source()) out.stats[op.id] = IntervalEstimate::exact(options.source_cardinality);
  }
  cat.finalize();
  out.plan = RheemPlan(std::move(ops), std::move(edges));
  return out;
}

}  // namespace xflow

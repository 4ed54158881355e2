/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <algorithm>
#include <memory>
#include <random>
#include <string>

#include "xflow/catalog.hpp"
#include "xflow/ccg.hpp"
#include "xflow/enumeration.hpp"
#include "xflow/plan.hpp"
#include "xflow/topology.hpp"

namespace fixtures {

inline std::string data(const std::string& rel) { return std::string(XFLOW_DATA_DIR) + "/" + rel; }

inline xflow::Operator op(std::string id, std::string kind) {
  xflow::Operator o;
  o.id = std::move(id);
  o.kind = std::move(kind);
  auto info = xflow::known_kind(o.kind);
  o.inputs = info ? info->inputs : 1;
  o.outputs = info ? info->outputs : 1;
  return o;
}

inline xflow::Edge edge(std::string from, std::string to, int from_slot = 0, int to_slot = 0, bool feedback = false) {
  return {std::move(from), from_slot, std::move(to), to_slot, feedback};
}

inline xflow::RheemPlan kmeans() { return xflow::load_plan(data("kmeans/plan.json")); }

// source -> Map -> ... -> sink
inline xflow::RheemPlan pipeline(int maps, const std::string& map_kind = "Map") {
  std::vector<xflow::Operator> ops{op("source", "CollectionSource")};
  std::vector<xflow::Edge> edges;
  std::string prev = "source";
  for (int i = 0; i < maps; ++i) {
    std::string id = "m" + std::to_string(i);
    ops.push_back(op(id, map_kind));
    edges.push_back(edge(prev, id));
    prev = id;
  }
  ops.push_back(op("sink", "CollectionSink"));
  edges.push_back(edge(prev, "sink"));
  return xflow::RheemPlan(ops, edges);
}

// ReduceBy maps 1-to-1 onto both platforms and 1-to-n onto GroupBy + Map.
inline const char* kFig3Catalog = R"({
  "platforms": [{"id": "JavaStreams"}, {"id": "Spark", "startup": 100}],
  "channels": [{"id": "JavaStream"}, {"id": "Collection", "reusable": true}, {"id": "RDD", "reusable": true}],
  "conversions": [
    {"from": "JavaStream", "to": "Collection", "cost": 1},
    {"from": "Collection", "to": "RDD", "cost": 5},
    {"from": "RDD", "to": "Collection", "cost": 5}
  ],
  "operators": [
    {"id": "JavaSource", "platform": "JavaStreams", "implements": "CollectionSource", "outputs": ["Collection"], "cost": 1},
    {"id": "JavaSink", "platform": "JavaStreams", "implements": "CollectionSink", "inputs": [["JavaStream", "Collection"]], "cost": 1},
    {"id": "SparkReduceBy", "platform": "Spark", "implements": "ReduceBy", "inputs": [["RDD"]], "outputs": ["RDD"], "cost": 10},
    {"id": "JavaReduceBy", "platform": "JavaStreams", "implements": "ReduceBy", "inputs": [["JavaStream", "Collection"]], "outputs": ["JavaStream"], "cost": 20},
    {"id": "JavaGroupBy", "platform": "JavaStreams", "implements": "GroupBy", "inputs": [["JavaStream", "Collection"]], "outputs": ["Collection"], "cost": 8},
    {"id": "JavaMap", "platform": "JavaStreams", "implements": "Map", "inputs": [["JavaStream", "Collection"]], "outputs": ["JavaStream"], "cost": 4}
  ],
  "mappings": [
    {"id": "source", "pattern": "CollectionSource", "substitute": ["JavaSource"]},
    {"id": "sink", "pattern": "CollectionSink", "substitute": ["JavaSink"]},
    {"id": "reduce-spark", "pattern": "ReduceBy", "substitute": ["SparkReduceBy"]},
    {"id": "reduce-java", "pattern": "ReduceBy", "substitute": ["JavaReduceBy"]},
    {"id": "reduce-split", "pattern": "ReduceBy", "substitute": [{"kind": "GroupBy"}, {"kind": "Map"}]},
    {"id": "group-java", "pattern": "GroupBy", "substitute": ["JavaGroupBy"]},
    {"id": "map-java", "pattern": "Map", "substitute": ["JavaMap"]}
  ]
})";

struct CcgInstance {
  xflow::ChannelConversionGraph ccg;
  int root = 0;
  std::vector<xflow::TargetSet> targets;
  std::vector<xflow::IntervalEstimate> costs;
};

inline xflow::ChannelConversionGraph unit_ccg(const std::vector<std::pair<std::string, bool>>& channels,
                                              const std::vector<std::pair<int, int>>& edges, double cost = 1.0) {
  std::vector<xflow::CcgChannel> cs;
  for (const auto& [id, reusable] : channels) cs.push_back({id, reusable});
  std::vector<xflow::CcgEdge> es;
  for (const auto& [from, to] : edges) {
    xflow::CcgEdge e{from, to, cs[from].id + "->" + cs[to].id, {}, xflow::kUnitCostsOne};
    e.cost[xflow::Resource::kCpu] = {0.0, cost};
    es.push_back(e);
  }
  return xflow::ChannelConversionGraph(cs, es);
}

// Up to `max_channels` channels, edge density 0.35, integer costs 1-10,
// coin-flip reusability, 1-3 non-empty target sets.
inline CcgInstance random_ccg(std::mt19937_64& rng, int max_channels = 8, int max_sets = 3) {
  int n = std::uniform_int_distribution<int>(2, max_channels)(rng);
  std::vector<xflow::CcgChannel> cs;
  for (int i = 0; i < n; ++i) cs.push_back({"c" + std::to_string(i), rng() % 2 == 0});
  std::vector<xflow::CcgEdge> es;
  std::uniform_int_distribution<int> cost(1, 10);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b || std::uniform_real_distribution<double>(0, 1)(rng) > 0.35) continue;
      xflow::CcgEdge e{a, b, cs[a].id + "->" + cs[b].id, {}, xflow::kUnitCostsOne};
      e.cost[xflow::Resource::kCpu] = {0.0, static_cast<double>(cost(rng))};
      es.push_back(e);
    }
  }
  CcgInstance inst;
  inst.ccg = xflow::ChannelConversionGraph(cs, es);
  inst.root = std::uniform_int_distribution<int>(0, n - 1)(rng);
  int sets = std::uniform_int_distribution<int>(1, max_sets)(rng);
  for (int s = 0; s < sets; ++s) {
    xflow::TargetSet t;
    for (int c = 0; c < n; ++c) {
      if (rng() % 3 == 0) t.push_back(c);
    }
    if (t.empty()) t.push_back(std::uniform_int_distribution<int>(0, n - 1)(rng));
    inst.targets.push_back(t);
  }
  inst.costs = inst.ccg.price(xflow::IntervalEstimate::exact(1.0));
  return inst;
}

// Random DAG with joins, fan-out, extra sources and several sinks. Every
// operator runs on a random non-empty subset of up to `max_platforms`
// platforms; some cross-platform conversions are missing.
inline xflow::SyntheticInstance random_instance(std::mt19937_64& rng, int max_ops = 8, int max_platforms = 3) {
  using namespace xflow;
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int target = uniform(2, max_ops);
  std::vector<Operator> ops;
  std::vector<Edge> edges;
  std::vector<int> consumers;
  auto add = [&](int inputs) {
    Operator o;
    o.id = "v" + std::to_string(ops.size());
    o.kind = "K" + std::to_string(ops.size());
    o.inputs = inputs;
    o.outputs = 1;
    ops.push_back(o);
    consumers.push_back(0);
    return static_cast<int>(ops.size()) - 1;
  };
  auto connect = [&](int from, int to, int slot) {
    edges.push_back({ops[from].id, 0, ops[to].id, slot, false});
    ++consumers[from];
  };
  int prev = add(0);
  while (static_cast<int>(ops.size()) < target) {
    const int remaining = target - static_cast<int>(ops.size());
    if (remaining >= 2 && uniform(0, 2) == 0) {
      int second = uniform(0, 1) == 0 ? add(0) : uniform(0, static_cast<int>(ops.size()) - 1);
      if (second == prev) second = add(0);
      int j = add(2);
      connect(prev, j, 0);
      connect(second, j, 1);
      prev = j;
    } else {
      int from = uniform(0, 3) == 0 ? uniform(0, static_cast<int>(ops.size()) - 1) : prev;
      int u = add(1);
      connect(from, u, 0);
      prev = u;
    }
  }
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (consumers[i] == 0) {
      if (ops[i].inputs == 0) {
        int sink = add(1);
        connect(static_cast<int>(i), sink, 0);
        ops[sink].outputs = 0;
      } else {
        ops[i].outputs = 0;
      }
    }
  }

  SyntheticInstance out;
  PlatformCatalog& cat = out.catalog;
  const int k = uniform(1, max_platforms);
  auto constant = [&](const std::string& ref, int value) {
    CostFunction fn;
    fn[Resource::kCpu].beta = value;
    cat.cost_functions[ref] = fn;
  };
  auto conversion = [&](const std::string& from, const std::string& to, int cost) {
    Conversion c;
    c.id = from + "->" + to;
    c.from = from;
    c.to = to;
    c.cost_ref = "conv:" + c.id;
    constant(c.cost_ref, cost);
    cat.conversions.push_back(c);
  };
  for (int p = 0; p < k; ++p) {
    const std::string pid = "P" + std::to_string(p);
    PlatformProfile profile;
    profile.id = pid;
    profile.startup = uniform(0, 30);
    cat.platforms.push_back(profile);
    cat.channels.push_back({pid + ".stream", false});
    cat.channels.push_back({pid + ".coll", true});
    cat.channels.push_back({pid + ".file", true});
    conversion(pid + ".stream", pid + ".coll", uniform(1, 10));
    conversion(pid + ".coll", pid + ".stream", uniform(1, 10));
    conversion(pid + ".coll", pid + ".file", uniform(1, 10));
    conversion(pid + ".file", pid + ".coll", uniform(1, 10));
  }
  for (int p = 0; p < k; ++p) {
    for (int q = 0; q < k; ++q) {
      if (p != q && uniform(0, 4) > 0) {
        conversion("P" + std::to_string(p) + ".file", "P" + std::to_string(q) + ".coll", uniform(1, 40));
      }
    }
  }
  for (const Operator& o : ops) {
    int mask = 0;
    while (mask == 0) mask = uniform(0, (1 << k) - 1);
    for (int p = 0; p < k; ++p) {
      if (!(mask >> p & 1)) continue;
      const std::string pid = "P" + std::to_string(p);
      ExecutionOperator e;
      e.id = o.id + "@" + pid;
      e.platform = pid;
      e.implements = {o.kind};
      for (int s = 0; s < o.inputs; ++s) {
        if (uniform(0, 1) == 0) {
          e.input_channels.push_back({pid + ".stream", pid + ".coll"});
        } else {
          e.input_channels.push_back({pid + ".coll"});
        }
      }
      if (o.outputs > 0) e.output_channels.push_back(pid + (uniform(0, 2) == 0 ? ".coll" : ".stream"));
      e.cost_ref = "op:" + e.id;
      constant(e.cost_ref, uniform(1, 100));
      cat.operators.push_back(e);
      OperatorMapping m;
      m.id = o.kind + "->" + e.id;
      m.pattern.nodes.push_back({o.kind, std::nullopt, std::nullopt});
      m.substitute.push_back({e.id, ""});
      cat.mappings.push_back(m);
    }
    if (o.is_source()) out.stats[o.id] = IntervalEstimate::exact(1000);
  }
  cat.finalize();
  out.plan = RheemPlan(std::move(ops), std::move(edges));
  return out;
}

// Owns everything a PlanSpace refers to.
struct Costed {
  xflow::PlatformCatalog catalog;
  xflow::ChannelConversionGraph ccg;
  xflow::InflatedPlan inflated;
  std::unique_ptr<xflow::PlanSpace> space;

  Costed(const xflow::RheemPlan& plan, xflow::PlatformCatalog cat, const xflow::SourceStats& stats,
         xflow::CostContext context = {})
      : catalog(std::move(cat)), ccg(xflow::ChannelConversionGraph::from_catalog(catalog)) {
    inflated = xflow::inflate(plan, catalog);
    xflow::estimate_cardinalities(inflated, stats);
    xflow::annotate_costs(inflated, catalog, ccg);
    space = std::make_unique<xflow::PlanSpace>(inflated, catalog, ccg, std::move(context));
  }
  explicit Costed(const xflow::SyntheticInstance& inst) : Costed(inst.plan, inst.catalog, inst.stats) {}
};

}  // namespace fixtures

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "xflow/enumeration.hpp"
#include "xflow/error.hpp"
#include "xflow/topology.hpp"

using namespace xflow;
using fixtures::Costed;
using fixtures::edge;
using fixtures::op;

namespace {

RheemPlan source_sink() {
  return RheemPlan({op("source", "CollectionSource"), op("sink", "CollectionSink")}, {edge("source", "sink")});
}

// source runs on P only; sink on P (cost p_sink) or Q (cost q_sink).
std::string two_platforms(double startup_p, double startup_q, double p_sink, double q_sink, bool cross = true) {
  auto num = [](double v) { return std::to_string(v); };
  std::string conv = cross ? R"({"from": "Pc", "to": "Qc", "cost": 4})" : "";
  return R"({
    "platforms": [{"id": "P", "startup": )" + num(startup_p) + R"(}, {"id": "Q", "startup": )" + num(startup_q) + R"(}],
    "channels": [{"id": "Pc", "reusable": true}, {"id": "Qc", "reusable": true}],
    "conversions": [)" + conv + R"(],
    "operators": [
      {"id": "PSource", "platform": "P", "implements": "CollectionSource", "outputs": ["Pc"], "cost": 10},
      {"id": "PSink", "platform": "P", "implements": "CollectionSink", "inputs": [["Pc"]], "cost": )" + num(p_sink) + R"(},
      {"id": "QSink", "platform": "Q", "implements": "CollectionSink", "inputs": [["Qc"]], "cost": )" + num(q_sink) + R"(}
    ],
    "mappings": [
      {"pattern": "CollectionSource", "substitute": ["PSource"]},
      {"pattern": "CollectionSink", "substitute": ["PSink"]},
      {"pattern": "CollectionSink", "substitute": ["QSink"]}
    ]
  })";
}

const SourceStats kStats{{"source", IntervalEstimate::exact(100)}};

std::set<std::string> platforms_of(const ExecutionPlan& p) { return {p.platforms.begin(), p.platforms.end()}; }

int alt_index(const Costed& c, int op, const std::string& exec) {
  const auto& alts = c.inflated.ops[op].alternatives;
  for (std::size_t a = 0; a < alts.size(); ++a) {
    if (alts[a].ops == std::vector<std::string>{exec}) return static_cast<int>(a);
  }
  return -1;
}

}  // namespace

TEST_CASE("prune rule parsing") {
  CHECK(parse_prune_rule("lossless").kind == PruneRule::Kind::kLossless);
  CHECK(parse_prune_rule("none").kind == PruneRule::Kind::kNone);
  CHECK(parse_prune_rule("topk:7").k == 7);
  CHECK(parse_prune_rule("topk:7").to_string() == "topk:7");
  CHECK_THROWS_AS(parse_prune_rule("topk:0"), Error);
  CHECK_THROWS_AS(parse_prune_rule("best"), Error);
}

TEST_CASE("singleton enumerations") {
  RheemPlan plan({op("source", "CollectionSource"), op("reduce", "ReduceBy"), op("sink", "CollectionSink")},
                 {edge("source", "reduce"), edge("reduce", "sink")});
  Costed c(plan, parse_catalog(fixtures::kFig3Catalog), kStats);
  Enumeration e = singleton(*c.space, 1);
  CHECK(e.scope == std::vector<int>{1});
  CHECK(e.subplans.size() == 3);
  CHECK(singleton(*c.space, 0).subplans.size() == 1);

  auto inst = generate_topology(Topology::kPipeline, 3, 4, 1);
  Costed t(inst);
  for (int v = 0; v < 3; ++v) {
    Enumeration s = singleton(*t.space, v);
    CHECK(s.subplans.size() == 4);
    for (const auto& sp : s.subplans) CHECK(std::popcount(sp.platforms) == 1);
  }
}

TEST_CASE("join stitches every connectable pair") {
  const char* catalog = R"({
    "platforms": [{"id": "P"}, {"id": "Q"}],
    "channels": [{"id": "Pc", "reusable": true}, {"id": "Qc", "reusable": true}, {"id": "Pf", "reusable": true}],
    "conversions": [{"from": "Pc", "to": "Qc", "cost": {"cpu": {"alpha": 0.01, "beta": 3}}},
                    {"from": "Qc", "to": "Pc", "cost": 7}, {"from": "Pc", "to": "Pf", "cost": 2}],
    "operators": [
      {"id": "S1", "platform": "P", "implements": "CollectionSource", "outputs": ["Pc"], "cost": 10},
      {"id": "S2", "platform": "Q", "implements": "CollectionSource", "outputs": ["Qc"], "cost": 12},
      {"id": "K1", "platform": "P", "implements": "CollectionSink", "inputs": [["Pc"]], "cost": 5},
      {"id": "K2", "platform": "Q", "implements": "CollectionSink", "inputs": [["Qc"]], "cost": 6},
      {"id": "K3", "platform": "P", "implements": "CollectionSink", "inputs": [["Pf"]], "cost": 1}
    ],
    "mappings": [
      {"pattern": "CollectionSource", "substitute": ["S1"]}, {"pattern": "CollectionSource", "substitute": ["S2"]},
      {"pattern": "CollectionSink", "substitute": ["K1"]}, {"pattern": "CollectionSink", "substitute": ["K2"]},
      {"pattern": "CollectionSink", "substitute": ["K3"]}
    ]
  })";
  Costed c(source_sink(), parse_catalog(catalog), kStats);
  Enumeration a = singleton(*c.space, 0), b = singleton(*c.space, 1);
  REQUIRE(a.subplans.size() == 2);
  REQUIRE(b.subplans.size() == 3);
  Enumeration j = join(*c.space, a, b);
  CHECK(j.scope == std::vector<int>{0, 1});
  CHECK(j.subplans.size() == 6);
  for (const Subplan& sp : j.subplans) {
    const Alternative& src = c.inflated.ops[0].alternatives[sp.choice[0]];
    const Alternative& dst = c.inflated.ops[1].alternatives[sp.choice[1]];
    ConversionTree t = find_mct(c.ccg, src.output_channels[0], {dst.input_sets[0]}, c.inflated.output_cardinality[0][0]);
    CHECK(sp.cost == doctest::Approx(src.scalar + dst.scalar + t.cost));
  }
  CHECK(join(*c.space, b, a).subplans.size() == 6);
  CHECK_THROWS_AS(join(*c.space, a, a), Error);
}

TEST_CASE("unreachable consumer channels drop the pair") {
  Costed c(source_sink(), parse_catalog(two_platforms(0, 0, 30, 10, false)), kStats);
  Enumeration j = join(*c.space, singleton(*c.space, 0), singleton(*c.space, 1));
  REQUIRE(j.subplans.size() == 1);
  CHECK(c.inflated.ops[1].alternatives[j.subplans[0].choice[1]].ops[0] == "PSink");

  const char* isolated = R"({
    "platforms": [{"id": "P"}], "channels": [{"id": "A"}, {"id": "B"}],
    "operators": [
      {"id": "S", "platform": "P", "implements": "CollectionSource", "outputs": ["A"], "cost": 1},
      {"id": "K", "platform": "P", "implements": "CollectionSink", "inputs": [["B"]], "cost": 1}
    ],
    "mappings": [{"pattern": "CollectionSource", "substitute": ["S"]}, {"pattern": "CollectionSink", "substitute": ["K"]}]
  })";
  Costed d(source_sink(), parse_catalog(isolated), kStats);
  CHECK(join(*d.space, singleton(*d.space, 0), singleton(*d.space, 1)).subplans.empty());
  try {
    enumerate(*d.space);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNoExecutableFullPlan);
  }
}

TEST_CASE("lossless keeps one subplan per boundary class") {
  // Two sources on P feed a map; the partial scope {source, map} has the map
  // as its only boundary operator.
  const char* catalog = R"({
    "platforms": [{"id": "P"}, {"id": "Q", "startup": 3}],
    "channels": [{"id": "Pc", "reusable": true}, {"id": "Qc", "reusable": true}],
    "conversions": [{"from": "Pc", "to": "Qc", "cost": 2}],
    "operators": [
      {"id": "FastSource", "platform": "P", "implements": "CollectionSource", "outputs": ["Pc"], "cost": 4},
      {"id": "SlowSource", "platform": "P", "implements": "CollectionSource", "outputs": ["Pc"], "cost": 9},
      {"id": "PMap", "platform": "P", "implements": "Map", "inputs": [["Pc"]], "outputs": ["Pc"], "cost": 5},
      {"id": "QMap", "platform": "Q", "implements": "Map", "inputs": [["Qc"]], "outputs": ["Qc"], "cost": 1},
      {"id": "QSink", "platform": "Q", "implements": "CollectionSink", "inputs": [["Qc"]], "cost": 1}
    ],
    "mappings": [
      {"pattern": "CollectionSource", "substitute": ["FastSource"]},
      {"pattern": "CollectionSource", "substitute": ["SlowSource"]},
      {"pattern": "Map", "substitute": ["PMap"]}, {"pattern": "Map", "substitute": ["QMap"]},
      {"pattern": "CollectionSink", "substitute": ["QSink"]}
    ]
  })";
  RheemPlan plan = fixtures::pipeline(1);
  Costed c(plan, parse_catalog(catalog), kStats);
  Enumeration e = join(*c.space, singleton(*c.space, 0), singleton(*c.space, 1));
  REQUIRE(e.subplans.size() == 4);
  CHECK(boundary_operators(*c.space, e.scope) == std::vector<int>{1});
  std::vector<Subplan> removed;
  Enumeration kept = prune(*c.space, e, PruneRule::lossless(), [&](const std::vector<int>&, const Subplan& s) {
    removed.push_back(s);
  });
  CHECK(kept.subplans.size() == 2);
  CHECK(removed.size() == 2);
  const int slow = alt_index(c, 0, "SlowSource");
  for (const Subplan& s : kept.subplans) CHECK(s.choice[0] != slow);
  for (const Subplan& s : removed) CHECK(s.choice[0] == slow);

  Enumeration distinct = singleton(*c.space, 1);
  CHECK(prune(*c.space, distinct, PruneRule::lossless()).subplans.size() == distinct.subplans.size());
  CHECK(prune(*c.space, e, PruneRule::none()).subplans.size() == 4);
}

TEST_CASE("top-k keeps the cheapest") {
  auto inst = generate_topology(Topology::kPipeline, 2, 10, 5);
  Costed c(inst);
  Enumeration e = join(*c.space, singleton(*c.space, 0), singleton(*c.space, 1));
  REQUIRE(e.subplans.size() >= 10);
  std::vector<double> costs;
  for (const auto& s : e.subplans) costs.push_back(s.cost);
  std::sort(costs.begin(), costs.end());
  Enumeration top = prune(*c.space, e, PruneRule::top_k(3));
  REQUIRE(top.subplans.size() == 3);
  std::vector<double> kept;
  for (const auto& s : top.subplans) kept.push_back(s.cost);
  std::sort(kept.begin(), kept.end());
  CHECK(kept == std::vector<double>(costs.begin(), costs.begin() + 3));
}

TEST_CASE("plan cost adds start-up once per platform") {
  SUBCASE("single platform") {
    Costed c(source_sink(), parse_catalog(two_platforms(5, 7, 20, 10)), kStats);
    std::vector<std::uint16_t> choice{0, static_cast<std::uint16_t>(alt_index(c, 1, "PSink"))};
    auto cost = c.space->full_cost(choice);
    REQUIRE(cost);
    CHECK(cost->total == 35);
    CHECK(cost->startup == 5);
  }
  SUBCASE("two platforms") {
    Costed c(source_sink(), parse_catalog(two_platforms(5, 7, 30, 10)), kStats);
    std::vector<std::uint16_t> choice{0, static_cast<std::uint16_t>(alt_index(c, 1, "QSink"))};
    auto cost = c.space->full_cost(choice);
    REQUIRE(cost);
    CHECK(cost->operators == 20);
    CHECK(cost->movement == 4);
    CHECK(cost->startup == 12);
    CHECK(cost->total == 36);
    ExecutionPlan best = enumerate(*c.space);
    CHECK(best.cost.low == 36);
    CHECK(platforms_of(best) == std::set<std::string>{"P", "Q"});
  }
  SUBCASE("expensive start-up flips the choice") {
    Costed c(source_sink(), parse_catalog(two_platforms(5, 100, 30, 10)), kStats);
    ExecutionPlan best = enumerate(*c.space);
    CHECK(best.cost.low == 45);
    CHECK(platforms_of(best) == std::set<std::string>{"P"});
  }
}

TEST_CASE("pipeline stays on the cheaper platform") {
  const char* catalog = R"({
    "platforms": [{"id": "P"}, {"id": "Q"}],
    "channels": [{"id": "Pc", "reusable": true}, {"id": "Qc", "reusable": true}],
    "conversions": [{"from": "Pc", "to": "Qc", "cost": 50}, {"from": "Qc", "to": "Pc", "cost": 50}],
    "operators": [
      {"id": "PS", "platform": "P", "implements": "CollectionSource", "outputs": ["Pc"], "cost": 10},
      {"id": "QS", "platform": "Q", "implements": "CollectionSource", "outputs": ["Qc"], "cost": 12},
      {"id": "PM", "platform": "P", "implements": "Map", "inputs": [["Pc"]], "outputs": ["Pc"], "cost": 10},
      {"id": "QM", "platform": "Q", "implements": "Map", "inputs": [["Qc"]], "outputs": ["Qc"], "cost": 3},
      {"id": "PK", "platform": "P", "implements": "CollectionSink", "inputs": [["Pc"]], "cost": 10},
      {"id": "QK", "platform": "Q", "implements": "CollectionSink", "inputs": [["Qc"]], "cost": 12}
    ],
    "mappings": [
      {"pattern": "CollectionSource", "substitute": ["PS"]}, {"pattern": "CollectionSource", "substitute": ["QS"]},
      {"pattern": "Map", "substitute": ["PM"]}, {"pattern": "Map", "substitute": ["QM"]},
      {"pattern": "CollectionSink", "substitute": ["PK"]}, {"pattern": "CollectionSink", "substitute": ["QK"]}
    ]
  })";
  Costed c(fixtures::pipeline(1), parse_catalog(catalog), kStats);
  ExhaustiveResult all = exhaustive_enumerate(*c.space);
  CHECK(all.evaluated == 8);
  ExecutionPlan best = enumerate(*c.space);
  CHECK(best.cost.low == 27);
  CHECK(platforms_of(best) == std::set<std::string>{"Q"});
  CHECK(all.plan.cost.low == 27);
  CHECK(all.plan.choice == best.choice);
}

TEST_CASE("single-operator plan") {
  auto inst = generate_topology(Topology::kPipeline, 1, 3, 8);
  Costed c(inst);
  ExecutionPlan best = enumerate(*c.space);
  double expected = 1e18;
  for (const auto& alt : c.inflated.ops[0].alternatives) {
    int p = std::countr_zero(alt.platforms);
    expected = std::min(expected, alt.scalar + c.catalog.platforms[p].startup);
  }
  CHECK(best.cost.low == expected);
  CHECK(exhaustive_enumerate(*c.space).plan.cost.low == expected);
}

TEST_CASE("lossless matches exhaustive on random plans") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 150; ++i) {
    auto inst = fixtures::random_instance(rng);
    Costed c(inst);
    std::optional<double> fast, slow;
    try {
      fast = enumerate(*c.space).breakdown.total;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoExecutableFullPlan);
    }
    try {
      slow = exhaustive_enumerate(*c.space).plan.breakdown.total;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNoExecutableFullPlan);
    }
    REQUIRE(fast.has_value() == slow.has_value());
    if (fast) CHECK(*fast == *slow);
  }
}

TEST_CASE("join-group order does not change the result") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 40; ++i) {
    Costed c(fixtures::random_instance(rng, 9, 3));
    std::optional<ExecutionPlan> base;
    try {
      base = enumerate(*c.space);
    } catch (const Error&) {
      continue;
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      EnumerateOptions opts;
      opts.shuffle_seed = seed;
      ExecutionPlan p = enumerate(*c.space, opts);
      CHECK(p.breakdown.total == base->breakdown.total);
      CHECK(p.choice == base->choice);
    }
  }
}

TEST_CASE("rules compared on one instance") {
  auto inst = generate_topology(Topology::kPipeline, 6, 3, 12);
  Costed c(inst);
  double lossless = enumerate(*c.space).breakdown.total;
  EnumerateOptions none, top1;
  none.rule = PruneRule::none();
  top1.rule = PruneRule::top_k(1);
  CHECK(enumerate(*c.space, none).breakdown.total == lossless);
  CHECK(enumerate(*c.space, top1).breakdown.total >= lossless);
}

TEST_CASE("breakdown adds up") {
  auto inst = generate_topology(Topology::kTree, 7, 3, 4);
  Costed c(inst);
  ExecutionPlan p = enumerate(*c.space);
  CHECK(p.breakdown.operators + p.breakdown.movement + p.breakdown.startup == doctest::Approx(p.breakdown.total));
  double ops = 0, moves = 0;
  for (const auto& o : p.operators) ops += o.scalar;
  for (const auto& m : p.conversions) moves += m.scalar;
  CHECK(ops == doctest::Approx(p.breakdown.operators));
  CHECK(moves == doctest::Approx(p.breakdown.movement));
}

TEST_CASE("exhaustive guard") {
  auto inst = generate_topology(Topology::kPipeline, 12, 4, 1);
  Costed c(inst);
  try {
    exhaustive_enumerate(*c.space);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInstanceTooLarge);
  }
}

TEST_CASE("topology shapes") {
  auto degrees = [](const RheemPlan& p) {
    std::vector<std::pair<int, int>> d;
    for (std::size_t i = 0; i < p.size(); ++i) {
      d.push_back({static_cast<int>(p.in_edges()[i].size()), static_cast<int>(p.out_edges()[i].size())});
    }
    return d;
  };
  auto pipe = generate_topology(Topology::kPipeline, 3, 2, 1).plan;
  CHECK(pipe.edges().size() == 2);
  CHECK(topo_order(pipe) == std::vector<std::string>{"o0", "o1", "o2"});

  auto fan = generate_topology(Topology::kFanout, 5, 2, 1).plan;
  auto fd = degrees(fan);
  CHECK(fd[0] == std::pair<int, int>{0, 4});
  for (int i = 1; i < 5; ++i) CHECK(fd[i] == std::pair<int, int>{1, 0});

  auto tree = generate_topology(Topology::kTree, 7, 2, 1).plan;
  auto td = degrees(tree);
  int joins = 0, leaves = 0;
  for (auto [in, out] : td) {
    if (in == 2) ++joins;
    if (in == 0 && out == 1) ++leaves;
  }
  CHECK(joins == 3);
  CHECK(leaves == 4);
  CHECK(td[0] == std::pair<int, int>{2, 0});
  CHECK(validate_plan(tree).empty());
  CHECK_THROWS_AS(generate_topology(Topology::kTree, 6, 2, 1), Error);

  auto a = generate_topology(Topology::kFanout, 6, 3, 9), b = generate_topology(Topology::kFanout, 6, 3, 9);
  CHECK(serialize_plan(a.plan) == serialize_plan(b.plan));
  CHECK(enumerate(*Costed(a).space).breakdown.total == enumerate(*Costed(b).space).breakdown.total);
}

TEST_CASE("k-means on the demo catalog") {
  PlatformCatalog cat = load_catalog(fixtures::data("demo/catalog.json"));
  Optimization o = optimize(fixtures::kmeans(), cat, load_source_stats(fixtures::data("kmeans/stats.json")));
  CHECK(o.plan.operators.size() == 8);
  CHECK(o.inflated.denoted_plans() == 384);
  CHECK(o.plan.breakdown.total > 0);
  OptimizeOptions ex;
  ex.exhaustive = true;
  Optimization e = optimize(fixtures::kmeans(), cat, load_source_stats(fixtures::data("kmeans/stats.json")), ex);
  CHECK(e.plan.breakdown.total == o.plan.breakdown.total);
}

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <algorithm>

#include "doctest.h"
#include "fixtures.hpp"
#include "xflow/error.hpp"
#include "xflow/progressive.hpp"

using namespace xflow;

namespace {

struct Flip {
  RheemPlan plan = load_plan(fixtures::data("flip/plan.json"));
  PlatformCatalog catalog = load_catalog(fixtures::data("flip/catalog.json"));
  SourceStats stats = load_source_stats(fixtures::data("flip/stats.json"));
};

ExecutionPlan one_movement(const std::string& root, std::vector<std::string> channels, IntervalEstimate card) {
  ExecutionPlan p;
  PlannedConversion c;
  c.producer = "a";
  c.root_channel = root;
  c.channels = std::move(channels);
  c.cardinality = card;
  p.conversions.push_back(c);
  return p;
}

const std::vector<std::string>& platforms_of(const ExecutionPlan& p, const std::string& id) {
  return std::find_if(p.operators.begin(), p.operators.end(), [&](const PlannedOperator& o) { return o.id == id; })
      ->platforms;
}

}  // namespace

TEST_CASE("checkpoint placement") {
  auto ccg = fixtures::unit_ccg({{"Collection", true}, {"Stream", false}}, {{1, 0}});
  auto uncertain = insert_checkpoints(one_movement("Collection", {"Collection"}, {500, 800, 0.5}), ccg);
  REQUIRE(uncertain.size() == 1);
  CHECK(uncertain[0].channel == "Collection");
  CHECK(uncertain[0].producer == "a");
  CHECK(insert_checkpoints(one_movement("Collection", {"Collection"}, IntervalEstimate::exact(700)), ccg).empty());
  CHECK(insert_checkpoints(one_movement("Stream", {"Stream"}, {500, 800, 0.5}), ccg).empty());
  auto via = insert_checkpoints(one_movement("Stream", {"Collection", "Stream"}, {500, 800, 0.5}), ccg);
  REQUIRE(via.size() == 1);
  CHECK(via[0].channel == "Collection");
  CHECK(insert_checkpoints(one_movement("Collection", {"Collection"}, {100, 800, 1.0}), ccg).size() == 1);
}

TEST_CASE("mismatch test") {
  CHECK_FALSE(cardinality_mismatch({100, 100, 1.0}, 100));
  CHECK(cardinality_mismatch({100, 100, 1.0}, 1000));
  CHECK(cardinality_mismatch({50, 500, 0.5}, 60));
  CHECK_FALSE(cardinality_mismatch({50, 500, 0.5}, 300));
}

TEST_CASE("true cardinalities follow the model") {
  Operator f = fixtures::op("f", "Filter");
  f.selectivity = 0.1;
  RheemPlan plan({fixtures::op("source", "CollectionSource"), f, fixtures::op("sink", "CollectionSink")},
                 {fixtures::edge("source", "f"), fixtures::edge("f", "sink")});
  TruthModel truth = parse_truth_model(R"({"sources": {"source": 1000}, "selectivities": {"f": 0.9}})");
  auto actual = true_cardinalities(plan, {{"source", IntervalEstimate::exact(1000)}}, truth);
  CHECK(actual[plan.index_of("f")] == doctest::Approx(900));
  InflatedPlan inf;
  inf.plan = plan;
  estimate_cardinalities(inf, {{"source", IntervalEstimate::exact(1000)}});
  CHECK(inf.output_cardinality[plan.index_of("f")][0].midpoint() == doctest::Approx(100));
  CHECK_THROWS_AS(parse_truth_model(R"({"sources": 3})"), Error);
}

TEST_CASE("observed blow-up moves the rest to the distributed platform") {
  Flip f;
  SimulationResult r = simulate(f.plan, f.catalog, f.stats, load_truth_model(fixtures::data("flip/truth.json")));
  for (const char* id : {"source", "explode", "normalize", "sink"}) {
    CHECK(platforms_of(r.initial, id) == std::vector<std::string>{"Central"});
  }
  REQUIRE(!r.checkpoints.empty());
  CHECK(r.checkpoints[0].producer == "explode");
  REQUIRE(r.reoptimizations.size() == 1);
  const Reoptimization& re = r.reoptimizations[0];
  CHECK(re.changed);
  CHECK(re.remaining_after < re.remaining_before);
  CHECK(re.remaining_before == doctest::Approx(20000));
  CHECK(re.remaining_after == doctest::Approx(8000));
  CHECK(platforms_of(r.final_plan, "normalize") == std::vector<std::string>{"Distributed"});
  CHECK(platforms_of(r.final_plan, "sink") == std::vector<std::string>{"Distributed"});
  CHECK(platforms_of(r.final_plan, "explode") == std::vector<std::string>{"Central"});
  auto fired = std::find_if(r.trace.begin(), r.trace.end(),
                            [](const TraceEvent& e) { return e.type == TraceEvent::Type::kCheckpoint; });
  REQUIRE(fired != r.trace.end());
  CHECK(fired->observed == doctest::Approx(10000));
  CHECK(fired->fired);
}

TEST_CASE("estimate-true run keeps the plan") {
  Flip f;
  SimulationResult r =
      simulate(f.plan, f.catalog, f.stats, load_truth_model(fixtures::data("flip/truth_as_estimated.json")));
  CHECK(r.reoptimizations.empty());
  CHECK(r.final_plan.choice == r.initial.choice);
  for (const auto& e : r.trace) {
    if (e.type == TraceEvent::Type::kCheckpoint) {
      CHECK_FALSE(e.fired);
      CHECK(e.estimated.contains(e.observed));
    }
  }
}

TEST_CASE("no checkpoints, one uninterrupted trace") {
  Flip f;
  SourceStats exact{{"source", IntervalEstimate::exact(1000)}};
  RheemPlan plan = fixtures::pipeline(1);
  PlatformCatalog cat = f.catalog;
  SimulationResult r = simulate(plan, cat, exact, parse_truth_model(R"({"sources": {"source": 1000}})"));
  CHECK(r.checkpoints.empty());
  CHECK(r.reoptimizations.empty());
  CHECK(std::all_of(r.trace.begin(), r.trace.end(),
                    [](const TraceEvent& e) { return e.type == TraceEvent::Type::kExecute; }));
  CHECK(r.trace.size() == plan.size());
  CHECK(!format_trace(r).empty());
}

TEST_CASE("reoptimize never worsens") {
  Flip f;
  Optimization o = optimize(f.plan, f.catalog, f.stats);
  const int n = static_cast<int>(f.plan.size());
  for (double observed : {10.0, 1000.0, 5000.0, 10000.0, 50000.0}) {
    for (int done = 1; done < n; ++done) {
      std::vector<bool> executed(n, false);
      for (int v : topo_order_indices(f.plan)) {
        if (std::count(executed.begin(), executed.end(), true) < done) executed[v] = true;
      }
      CardinalityOverrides seen{{"explode", IntervalEstimate::exact(observed)}};
      if (!executed[f.plan.index_of("explode")]) seen.clear();
      Reoptimization re = reoptimize(f.plan, f.catalog, f.stats, o.plan, executed, seen);
      CHECK(re.remaining_after <= re.remaining_before);
      for (int v = 0; v < n; ++v) {
        if (executed[v]) CHECK(re.plan.choice[v] == o.plan.choice[v]);
      }
    }
  }
}

TEST_CASE("pinned remainder stays put") {
  Flip f;
  Optimization o = optimize(f.plan, f.catalog, f.stats);
  std::vector<bool> executed(f.plan.size(), true);
  executed[f.plan.index_of("sink")] = false;
  CardinalityOverrides seen{{"normalize", IntervalEstimate::exact(10000)}};
  OptimizeOptions pin;
  pin.context.pinned.assign(f.plan.size(), -1);
  pin.context.pinned[f.plan.index_of("sink")] = o.plan.choice[f.plan.index_of("sink")];
  Reoptimization re = reoptimize(f.plan, f.catalog, f.stats, o.plan, executed, seen, pin);
  CHECK(re.plan.choice == o.plan.choice);
  CHECK_FALSE(re.changed);
  CHECK(reoptimize(f.plan, f.catalog, f.stats, o.plan, executed, seen).changed);
}

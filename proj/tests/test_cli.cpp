/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>

#include "doctest.h"
#include "fixtures.hpp"
#include "xflow/bench.hpp"
#include "xflow/dot.hpp"
#include "xflow/error.hpp"
#include "xflow/report.hpp"

using namespace xflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(XFLOW_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string d(const std::string& rel) { return fixtures::data(rel); }

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / "xflow_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write(const std::string& name, const std::string& text) {
  fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

int count(const std::string& text, const std::regex& re) {
  return static_cast<int>(std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

const std::regex kNode(R"(^\s*"[^"]+" \[)", std::regex::multiline);
const std::regex kEdge(R"(->.*\[label)");

}  // namespace

TEST_CASE("catalog loading") {
  PlatformCatalog demo = load_catalog(d("demo/catalog.json"));
  CHECK(demo.platforms.size() == 2);
  CHECK(demo.platforms[1].id == "Spark");
  try {
    parse_catalog(R"({"platforms": [{"id": "P"}], "channels": [{"id": "C"}],
      "operators": [{"id": "x", "platform": "P", "implements": "Map", "inputs": [["Missing"]], "outputs": ["C"], "cost": 1}]})");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSchema);
    CHECK(std::string(e.what()).find("Missing") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_catalog(R"({"platforms": []})"), Error);
}

TEST_CASE("dot renderings") {
  fixtures::Costed c(RheemPlan({fixtures::op("source", "CollectionSource"), fixtures::op("sink", "CollectionSink")},
                               {fixtures::edge("source", "sink")}),
                     load_catalog(d("flip/catalog.json")), {{"source", IntervalEstimate::exact(10)}});
  ExecutionPlan p = enumerate(*c.space);
  std::string dot = emit_dot(p);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(count(dot, kNode) == 2);
  CHECK(count(dot, std::regex("->")) == 1);
  CHECK(emit_dot(p) == dot);
  CHECK(emit_dot(c.inflated) == emit_dot(c.inflated));

  auto ccg = ChannelConversionGraph::from_catalog(load_catalog(d("fig5/ccg.json"), false));
  ConversionTree t = find_mct(ccg, ccg.index_of("Stream"), {{ccg.index_of("DataSet")}, {ccg.index_of("RDD")}},
                              IntervalEstimate::exact(1));
  std::string tree = emit_dot(t, ccg);
  CHECK(count(tree, kNode) == 4);
  CHECK(count(tree, std::regex("style=dashed")) == 3);
}

TEST_CASE("bench rows") {
  BenchConfig cfg;
  cfg.sizes = {10, 50, 100};
  cfg.platforms = {3};
  auto rows = run_bench(cfg);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.status == "ok");
  CHECK(rows[0].time_ms <= rows[1].time_ms);
  CHECK(rows[1].time_ms <= rows[2].time_ms);

  BenchRow guarded = run_bench_case(Topology::kPipeline, 20, 3, parse_strategy("exhaustive"), 1);
  CHECK(guarded.status == "too-large");
  std::string csv = bench_csv({guarded}, true);
  CHECK(csv.rfind(bench_csv_header(), 0) == 0);
  CHECK(csv.find("too-large") != std::string::npos);
  CHECK_THROWS_AS(parse_strategy("fastest"), Error);
}

TEST_CASE("exit codes") {
  CHECK(run("validate " + d("kmeans/plan.json")).code == 0);
  CHECK(run("validate " + write("bad.json", R"({"operators": [{"id": "m", "kind": "Map"}, {"id": "k", "kind": "CollectionSink"}],
    "edges": [{"from": "m", "to": "k"}]})")).code == 1);
  CHECK(run("validate " + write("broken.json", "{")).code == 1);
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("optimize").code == 1);
  CHECK(run("mct " + d("fig5/ccg.json") + " --root Stream --targets 'DataSet;RDD|CachedRDD'").code == 0);
  CHECK(run("mct " + d("fig5/ccg.json") + " --root DataSet --targets Stream").code == 2);
  CHECK(run("mct " + d("fig5/ccg.json") + " --root Nope --targets DataSet").code == 1);

  std::string isolated = write("isolated.json", R"({
    "platforms": [{"id": "P"}], "channels": [{"id": "A"}, {"id": "B"}],
    "operators": [
      {"id": "S", "platform": "P", "implements": "CollectionSource", "outputs": ["A"], "cost": 1},
      {"id": "M", "platform": "P", "implements": "FlatMap", "inputs": [["A"]], "outputs": ["A"], "cost": 1},
      {"id": "N", "platform": "P", "implements": "Map", "inputs": [["A"]], "outputs": ["A"], "cost": 1},
      {"id": "K", "platform": "P", "implements": "CollectionSink", "inputs": [["B"]], "cost": 1}
    ],
    "mappings": [{"pattern": "CollectionSource", "substitute": ["S"]}, {"pattern": "FlatMap", "substitute": ["M"]},
                 {"pattern": "Map", "substitute": ["N"]}, {"pattern": "CollectionSink", "substitute": ["K"]}]
  })");
  CHECK(run("optimize " + d("flip/plan.json") + " " + isolated + " --stats " + d("flip/stats.json")).code == 2);
  CHECK(run("optimize " + d("kmeans/plan.json") + " " + d("flip/catalog.json") + " --stats " + d("kmeans/stats.json")).code == 2);
  CHECK(run("optimize " + d("flip/plan.json") + " " + d("flip/catalog.json")).code == 1);
}

TEST_CASE("subcommand outputs") {
  Run inflate = run("inflate " + d("kmeans/plan.json") + " " + d("demo/catalog.json"));
  CHECK(inflate.code == 0);
  CHECK(inflate.out.find("384") != std::string::npos);
  Run learn = run("learn " + d("learn/logs.txt") + " " + d("learn/templates.json") + " --seed 3");
  CHECK(learn.code == 0);
  CHECK(learn.out.find("map") != std::string::npos);
  Run sim = run("simulate " + d("flip/plan.json") + " " + d("flip/truth.json") + " --catalog " + d("flip/catalog.json") +
                " --stats " + d("flip/stats.json"));
  CHECK(sim.code == 0);
  CHECK(sim.out.find("Distributed") != std::string::npos);
  Run bench = run("bench --topology pipeline --n 4,6 --k 2 --prune lossless,none --seed 1,2 --omit-timings");
  CHECK(bench.code == 0);
  CHECK(count(bench.out, std::regex("\n")) == 9);
}

TEST_CASE("repeated runs are byte-identical") {
  const std::vector<std::string> commands = {
      "optimize " + d("kmeans/plan.json") + " " + d("demo/catalog.json") + " --stats " + d("kmeans/stats.json") +
          " --explain --omit-timings",
      "optimize " + d("kmeans/plan.json") + " " + d("demo/catalog.json") + " --stats " + d("kmeans/stats.json") +
          " --seed 5 --prune topk:2 --omit-timings --explain",
      "bench --topology pipeline,fanout,tree --n 7 --k 3 --prune lossless,topk:1 --seed 1,2 --omit-timings",
      "learn " + d("learn/logs.txt") + " " + d("learn/templates.json") + " --seed 9 --generations 20",
      "inflate " + d("kmeans/plan.json") + " " + d("demo/catalog.json") + " --dot",
  };
  for (const auto& cmd : commands) {
    Run a = run(cmd), b = run(cmd);
    CHECK(a.code == 0);
    CHECK(!a.out.empty());
    CHECK(a.out == b.out);
  }
}

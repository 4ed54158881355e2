/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "xflow/bench.hpp"
#include "xflow/catalog.hpp"
#include "xflow/ccg.hpp"
#include "xflow/dot.hpp"
#include "xflow/enumeration.hpp"
#include "xflow/error.hpp"
#include "xflow/learner.hpp"
#include "xflow/plan.hpp"
#include "xflow/progressive.hpp"
#include "xflow/report.hpp"

namespace {

using namespace xflow;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
  out << text;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run_validate(const std::string& plan_path) {
  RheemPlan plan = load_plan(plan_path);
  ValidationReport report = validate_plan(plan);
  if (report.empty()) {
    std::cout << "ok: " << plan.size() << " operators, " << plan.edges().size() << " edges\n";
    return kExitOk;
  }
  for (const auto& v : report) std::cout << v.code << ": " << v.message << "\n";
  return kExitUsage;
}

int run_inflate(const std::string& plan_path, const std::vector<std::string>& catalogs, bool dot) {
  InflatedPlan inflated = inflate(load_plan(plan_path), load_catalog(catalogs));
  if (dot) {
    std::cout << emit_dot(inflated);
  } else {
    std::cout << canonical_form(inflated);
    std::cout << "denoted plans: " << format_number(inflated.denoted_plans()) << "\n";
  }
  return kExitOk;
}

std::vector<TargetSet> parse_targets(const ChannelConversionGraph& ccg, const std::string& spec) {
  std::vector<TargetSet> out;
  for (const auto& set : split(spec, ';')) {
    TargetSet ts;
    for (const auto& id : split(set, '|')) {
      int c = ccg.index_of(id);
      if (c < 0) throw Error(ErrorCode::kInvalidArgument, "unknown channel '" + id + "'");
      ts.push_back(c);
    }
    std::sort(ts.begin(), ts.end());
    out.push_back(ts);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidArgument, "--targets needs at least one channel set");
  return out;
}

int run_mct(const std::vector<std::string>& files, const std::string& root, const std::string& targets,
            double card, bool dot, bool brute) {
  PlatformCatalog cat = load_catalog(files, false);
  ChannelConversionGraph ccg = ChannelConversionGraph::from_catalog(cat);
  int r = ccg.index_of(root);
  if (r < 0) throw Error(ErrorCode::kInvalidArgument, "unknown root channel '" + root + "'");
  auto sets = parse_targets(ccg, targets);
  IntervalEstimate c = IntervalEstimate::exact(card);
  ConversionTree tree = brute ? brute_force_mct(ccg, r, sets, c) : find_mct(ccg, r, sets, c);
  std::cout << (dot ? emit_dot(tree, ccg) : format_tree(tree, ccg));
  return kExitOk;
}

struct OptimizeArgs {
  std::string plan;
  std::vector<std::string> catalogs;
  std::string stats;
  std::string prune = "lossless";
  std::uint64_t seed = 0;
  bool seeded = false;
  bool explain = false;
  bool omit_timings = false;
  bool exhaustive = false;
  std::string dot;
};

int run_optimize(const OptimizeArgs& a) {
  RheemPlan plan = load_plan(a.plan);
  PlatformCatalog cat = load_catalog(a.catalogs);
  SourceStats stats = a.stats.empty() ? SourceStats{} : load_source_stats(a.stats);
  OptimizeOptions opts;
  opts.enumerate.rule = parse_prune_rule(a.prune);
  if (a.seeded) opts.enumerate.shuffle_seed = a.seed;
  opts.exhaustive = a.exhaustive;
  Optimization result = optimize(plan, cat, stats, opts);
  std::cout << format_plan(result.plan);
  if (a.explain) std::cout << format_explain(result.plan, result.timings, a.omit_timings);
  if (!a.dot.empty()) write_file(a.dot, emit_dot(result.plan));
  return kExitOk;
}

int run_learn(const std::string& logs, const std::string& templates, std::uint64_t seed, int generations,
              int population, bool history) {
  LearnerConfig cfg = load_templates(templates);
  cfg.seed = seed;
  if (generations > 0) cfg.generations = generations;
  if (population > 0) cfg.population = population;
  LearnResult r = learn(load_logs(logs), cfg);
  std::cout << learned_to_json(r);
  std::cout << "loss: " << format_number(r.loss) << "\n";
  std::cout << "population mean loss: " << format_number(r.initial_mean_loss) << " -> "
            << format_number(r.final_mean_loss) << "\n";
  if (history) {
    for (std::size_t g = 0; g < r.best_loss_history.size(); ++g) {
      std::cout << "generation " << g << ": " << format_number(r.best_loss_history[g]) << "\n";
    }
  }
  return kExitOk;
}

int run_simulate(const std::string& plan_path, const std::string& truth, const std::vector<std::string>& catalogs,
                 const std::string& stats, const std::string& report, bool no_reopt) {
  ProgressiveOptions opts;
  opts.reoptimize = !no_reopt;
  SimulationResult r = simulate(load_plan(plan_path), load_catalog(catalogs),
                                stats.empty() ? SourceStats{} : load_source_stats(stats), load_truth_model(truth), opts);
  std::string text = format_trace(r);
  if (report.empty()) {
    std::cout << text;
  } else {
    write_file(report, text);
    std::cout << "initial cost: " << format_number(r.initial.breakdown.total) << "\n";
    std::cout << "re-optimizations: " << r.reoptimizations.size() << "\n";
  }
  return kExitOk;
}

struct BenchArgs {
  std::string topologies = "pipeline";
  std::string sizes = "10";
  std::string platforms = "3";
  std::string prune = "lossless";
  std::string seeds = "1";
  std::string out;
  bool omit_timings = false;
};

int run_bench_cmd(const BenchArgs& a) {
  BenchConfig cfg;
  cfg.topologies.clear();
  for (const auto& t : split(a.topologies, ',')) cfg.topologies.push_back(parse_topology(t));
  auto ints = [](const std::string& s) {
    std::vector<int> out;
    for (const auto& x : split(s, ',')) out.push_back(std::stoi(x));
    return out;
  };
  cfg.sizes = ints(a.sizes);
  cfg.platforms = ints(a.platforms);
  cfg.strategies.clear();
  for (const auto& p : split(a.prune, ',')) cfg.strategies.push_back(parse_strategy(p));
  cfg.seeds.clear();
  for (const auto& s : split(a.seeds, ',')) cfg.seeds.push_back(std::stoull(s));
  std::string csv;
  if (a.out.empty()) {
    std::cout << bench_csv_header() << "\n" << std::flush;
    for (Topology t : cfg.topologies) {
      for (int n : cfg.sizes) {
        for (int k : cfg.platforms) {
          for (const auto& s : cfg.strategies) {
            for (auto seed : cfg.seeds) {
              std::cout << bench_csv_row(run_bench_case(t, n, k, s, seed, cfg.topology), a.omit_timings) << "\n"
                        << std::flush;
            }
          }
        }
      }
    }
  } else {
    write_file(a.out, bench_csv(run_bench(cfg), a.omit_timings));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xflow: cross-platform dataflow optimizer"};
  app.require_subcommand(1);

  std::string plan_path;
  auto* validate = app.add_subcommand("validate", "check a plan file");
  validate->add_option("plan", plan_path, "plan JSON")->required()->check(CLI::ExistingFile);

  std::vector<std::string> inflate_files;
  bool inflate_dot = false;
  auto* inflate_cmd = app.add_subcommand("inflate", "show the alternatives of every operator");
  inflate_cmd->add_option("plan", plan_path, "plan JSON")->required()->check(CLI::ExistingFile);
  inflate_cmd->add_option("catalog", inflate_files, "catalog JSON files")->required()->check(CLI::ExistingFile);
  inflate_cmd->add_flag("--dot", inflate_dot, "emit Graphviz");

  std::vector<std::string> mct_files;
  std::string root, targets;
  double card = 1.0;
  bool mct_dot = false, brute = false;
  auto* mct = app.add_subcommand("mct", "minimum conversion tree");
  mct->add_option("ccg", mct_files, "catalog files with channels and conversions")->required()->check(CLI::ExistingFile);
  mct->add_option("--root", root, "root channel")->required();
  mct->add_option("--targets", targets, "target sets: A|B;C")->required();
  mct->add_option("--card", card, "cardinality of the moved data")->check(CLI::NonNegativeNumber);
  mct->add_flag("--dot", mct_dot, "emit Graphviz");
  mct->add_flag("--brute-force", brute, "use the exhaustive solver");

  OptimizeArgs opt;
  auto* optimize_cmd = app.add_subcommand("optimize", "choose the cheapest execution plan");
  optimize_cmd->add_option("plan", opt.plan, "plan JSON")->required()->check(CLI::ExistingFile);
  optimize_cmd->add_option("catalog", opt.catalogs, "catalog, CCG and profile files")->required()->check(CLI::ExistingFile);
  optimize_cmd->add_option("--stats", opt.stats, "source statistics JSON")->check(CLI::ExistingFile);
  optimize_cmd->add_option("--prune", opt.prune, "lossless | topk:K | none");
  auto* seed_opt = optimize_cmd->add_option("--seed", opt.seed, "process join groups in seeded random order");
  optimize_cmd->add_flag("--explain", opt.explain, "print phase timings and cost breakdown");
  optimize_cmd->add_flag("--omit-timings", opt.omit_timings, "print timings as '-'");
  optimize_cmd->add_flag("--exhaustive", opt.exhaustive, "evaluate every plan");
  optimize_cmd->add_option("--dot", opt.dot, "write the plan as Graphviz");

  std::string logs, templates;
  std::uint64_t learn_seed = 1;
  int generations = 0, population = 0;
  bool history = false;
  auto* learn_cmd = app.add_subcommand("learn", "fit cost functions to execution logs");
  learn_cmd->add_option("logs", logs, "execution log")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("templates", templates, "cost function templates JSON")->required()->check(CLI::ExistingFile);
  learn_cmd->add_option("--seed", learn_seed, "random seed");
  learn_cmd->add_option("--generations", generations, "generations")->check(CLI::PositiveNumber);
  learn_cmd->add_option("--population", population, "population size")->check(CLI::Range(2, 1000000));
  learn_cmd->add_flag("--history", history, "print best loss per generation");

  std::string truth, sim_stats, report;
  std::vector<std::string> sim_catalogs;
  bool no_reopt = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "execute against true cardinalities");
  simulate_cmd->add_option("plan", plan_path, "plan JSON")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("truth", truth, "truth model JSON")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--catalog", sim_catalogs, "catalog files")->required()->check(CLI::ExistingFile);
  simulate_cmd->add_option("--stats", sim_stats, "source statistics JSON")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--report", report, "write the trace here");
  simulate_cmd->add_flag("--no-reoptimize", no_reopt, "never re-plan at checkpoints");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "optimizer scalability on synthetic plans");
  bench_cmd->add_option("--topology", bench.topologies, "pipeline,fanout,tree");
  bench_cmd->add_option("--n", bench.sizes, "operator counts, comma separated");
  bench_cmd->add_option("--k", bench.platforms, "platform counts, comma separated");
  bench_cmd->add_option("--prune", bench.prune, "lossless,topk:K,none,exhaustive");
  bench_cmd->add_option("--seed", bench.seeds, "seeds, comma separated");
  bench_cmd->add_option("--out", bench.out, "write CSV here instead of stdout");
  bench_cmd->add_flag("--omit-timings", bench.omit_timings, "leave timing columns empty");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return run_validate(plan_path);
    if (*inflate_cmd) return run_inflate(plan_path, inflate_files, inflate_dot);
    if (*mct) return run_mct(mct_files, root, targets, card, mct_dot, brute);
    if (*optimize_cmd) {
      opt.seeded = seed_opt->count() > 0;
      return run_optimize(opt);
    }
    if (*learn_cmd) return run_learn(logs, templates, learn_seed, generations, population, history);
    if (*simulate_cmd) return run_simulate(plan_path, truth, sim_catalogs, sim_stats, report, no_reopt);
    if (*bench_cmd) return run_bench_cmd(bench);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.infeasible() ? kExitInfeasible : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace xflow {

/// One operator execution inside a logged run.
struct LogTerm {
  std::string op;
  std::string ref;       // cost function being learned
  double cardinality = 0.0;
};

/// A measured run: its wall time and the operators that made it up.
struct LogRecord {
  double time = 0.0;
  std::vector<LogTerm> terms;
};

/// One record per line: `<time> <op>@<ref>=<cardinality> ...`. Blank lines and
/// lines starting with '#' are skipped.
std::vector<LogRecord> parse_logs(std::string_view text);
std::vector<LogRecord> load_logs(const std::string& path);

/// Search range of one parameter; low == high fixes it.
struct ParamRange {
  double low = 0.0;
  double high = 0.0;
  bool fixed() const { return low == high; }
};

/// Affine template alpha * c + beta for one cost function reference.
struct CostTemplate {
  std::string ref;
  ParamRange alpha;
  ParamRange beta;
};

struct LearnerConfig {
  std::vector<CostTemplate> templates;
  double smoothing = 1.0;
  int population = 100;
  int generations = 200;
  int tournament = 4;
  double crossover_rate = 0.7;
  double mutation_rate = 0.1;
  int elitism = 2;
  bool polish = true;
  std::uint64_t seed = 1;
};

/// {"smoothing": 1, "functions": [{"ref": "r", "alpha": [lo, hi] | v, "beta": ...}]}
LearnerConfig parse_templates(std::string_view text);
LearnerConfig load_templates(const std::string& path);

struct LearnedFunction {
  std::string ref;
  double alpha = 0.0;
  double beta = 0.0;
};

struct LearnResult {
  std::vector<LearnedFunction> functions;  // template order
  std::vector<double> x_min;               // alpha, beta per template
  double loss = 0.0;                       // mean relative loss at x_min
  std::vector<double> best_loss_history;   // best so far after each generation, generation 0 first
  double initial_mean_loss = 0.0;          // population mean, generation 0
  double final_mean_loss = 0.0;            // population mean, last generation
};

/// Mean relative loss of `x` (alpha, beta per template) over the logs.
double mean_loss(const std::vector<LogRecord>& logs, const LearnerConfig& config, const std::vector<double>& x);

/// Genetic search for the parameters minimizing the mean relative loss,
/// followed by a deterministic local refinement. Throws kInsufficientLogs when
/// a template with free parameters never appears in the logs.
LearnResult learn(const std::vector<LogRecord>& logs, const LearnerConfig& config);

/// Learned functions as a catalog `costFunctions` object (CPU resource).
std::string learned_to_json(const LearnResult& result);

}  // namespace xflow

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/learner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "xflow/costmodel.hpp"
#include "xflow/error.hpp"

namespace xflow {

using detail::Json;

namespace {

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::vector<LogRecord> parse_logs(std::string_view text) {
  std::vector<LogRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream words(line);
    std::string word;
    if (!(words >> word) || word.front() == '#') continue;
    const std::string where = "logs line " + std::to_string(lineno);
    LogRecord rec;
    if (!parse_double(word, rec.time) || !(rec.time > 0.0)) {
      throw Error(ErrorCode::kSchema, where + ": expected a positive time, got '" + word + "'");
    }
    while (words >> word) {
      auto at = word.find('@');
      auto eq = word.find('=', at == std::string::npos ? 0 : at);
      if (at == std::string::npos || eq == std::string::npos || at == 0 || eq == at + 1) {
        throw Error(ErrorCode::kSchema, where + ": expected <op>@<ref>=<cardinality>, got '" + word + "'");
      }
      LogTerm term{word.substr(0, at), word.substr(at + 1, eq - at - 1), 0.0};
      if (!parse_double(std::string_view(word).substr(eq + 1), term.cardinality) || term.cardinality < 0.0) {
        throw Error(ErrorCode::kSchema, where + ": bad cardinality in '" + word + "'");
      }
      rec.terms.push_back(std::move(term));
    }
    if (rec.terms.empty()) throw Error(ErrorCode::kSchema, where + ": record lists no operators");
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<LogRecord> load_logs(const std::string& path) { return parse_logs(detail::read_file(path)); }

namespace {

ParamRange parse_range(const Json& fn, const char* key, const std::string& path) {
  if (!fn.contains(key)) return {0.0, 0.0};
  const Json& v = fn[key];
  const std::string p = path + "." + key;
  ParamRange r;
  if (v.is_number()) {
    r.low = r.high = v.get<double>();
  } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    r.low = v[0].get<double>();
    r.high = v[1].get<double>();
  } else {
    detail::schema_error(p, "expected a number or [low, high]");
  }
  if (!(r.low <= r.high)) detail::schema_error(p, "low must not exceed high");
  return r;
}

}  // namespace

LearnerConfig parse_templates(std::string_view text) {
  Json doc = detail::parse_json(text, "templates");
  if (!doc.is_object()) detail::schema_error("templates", "expected an object");
  LearnerConfig cfg;
  cfg.smoothing = detail::opt_number(doc, "smoothing", "templates").value_or(1.0);
  if (!(cfg.smoothing > 0.0)) detail::schema_error("templates.smoothing", "must be > 0");
  const Json& fns = detail::get_array(doc, "functions", "templates");
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const std::string path = detail::index_path("templates", "functions", i);
    if (!fns[i].is_object()) detail::schema_error(path, "expected an object");
    CostTemplate t;
    t.ref = detail::get_string(fns[i], "ref", path);
    t.alpha = parse_range(fns[i], "alpha", path);
    t.beta = parse_range(fns[i], "beta", path);
    for (const auto& other : cfg.templates) {
      if (other.ref == t.ref) detail::schema_error(path + ".ref", "duplicate ref '" + t.ref + "'");
    }
    cfg.templates.push_back(std::move(t));
  }
  return cfg;
}

LearnerConfig load_templates(const std::string& path) { return parse_templates(detail::read_file(path)); }

namespace {

struct Problem {
  // Per record: (template index, cardinality) terms.
  std::vector<std::vector<std::pair<int, double>>> terms;
  std::vector<double> times;
  double smoothing = 1.0;

  double loss(const std::vector<double>& x) const {
    double total = 0.0;
    for (std::size_t r = 0; r < times.size(); ++r) {
      double est = 0.0;
      for (auto [t, c] : terms[r]) est += x[2 * t] * c + x[2 * t + 1];
      total += relative_loss(times[r], est, smoothing);
    }
    return times.empty() ? 0.0 : total / static_cast<double>(times.size());
  }
};

Problem build_problem(const std::vector<LogRecord>& logs, const LearnerConfig& config) {
  std::map<std::string, int, std::less<>> index;
  for (std::size_t i = 0; i < config.templates.size(); ++i) index[config.templates[i].ref] = static_cast<int>(i);
  Problem p;
  p.smoothing = config.smoothing;
  for (const auto& rec : logs) {
    std::vector<std::pair<int, double>> terms;
    for (const auto& term : rec.terms) {
      auto it = index.find(term.ref);
      if (it == index.end()) {
        throw Error(ErrorCode::kUnknownCostFunction, "log term '" + term.op + "' uses unknown cost function '" +
                                                         term.ref + "'");
      }
      terms.emplace_back(it->second, term.cardinality);
    }
    p.terms.push_back(std::move(terms));
    p.times.push_back(rec.time);
  }
  return p;
}

std::vector<ParamRange> gene_ranges(const LearnerConfig& config) {
  std::vector<ParamRange> out;
  for (const auto& t : config.templates) {
    out.push_back(t.alpha);
    out.push_back(t.beta);
  }
  return out;
}

}  // namespace

double mean_loss(const std::vector<LogRecord>& logs, const LearnerConfig& config, const std::vector<double>& x) {
  return build_problem(logs, config).loss(x);
}

LearnResult learn(const std::vector<LogRecord>& logs, const LearnerConfig& config) {
  if (config.templates.empty()) throw Error(ErrorCode::kInvalidArgument, "no cost function templates");
  if (config.population < 2 || config.generations < 1 || config.tournament < 1 || config.elitism < 0 ||
      config.elitism > config.population) {
    throw Error(ErrorCode::kInvalidArgument, "invalid genetic algorithm settings");
  }
  Problem problem = build_problem(logs, config);
  std::vector<int> seen(config.templates.size(), 0);
  for (const auto& rec : problem.terms) {
    for (auto [t, c] : rec) seen[t] = 1;
  }
  for (std::size_t t = 0; t < config.templates.size(); ++t) {
    const auto& tpl = config.templates[t];
    if (!seen[t] && !(tpl.alpha.fixed() && tpl.beta.fixed())) {
      throw Error(ErrorCode::kInsufficientLogs, "InsufficientLogs: no record uses '" + tpl.ref + "'");
    }
  }

  const std::vector<ParamRange> ranges = gene_ranges(config);
  const std::size_t genes = ranges.size();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto clamp = [&](std::vector<double>& x) {
    for (std::size_t g = 0; g < genes; ++g) x[g] = std::clamp(x[g], ranges[g].low, ranges[g].high);
  };

  using Individual = std::pair<double, std::vector<double>>;
  std::vector<Individual> pop(config.population);
  for (auto& ind : pop) {
    ind.second.resize(genes);
    for (std::size_t g = 0; g < genes; ++g) {
      const auto& r = ranges[g];
      ind.second[g] = r.fixed() ? r.low : r.low + (r.high - r.low) * unit(rng);
    }
    ind.first = problem.loss(ind.second);
  }
  auto by_loss = [](const Individual& a, const Individual& b) { return a.first < b.first; };
  auto mean_of = [](const std::vector<Individual>& p) {
    double s = 0.0;
    for (const auto& ind : p) s += ind.first;
    return s / static_cast<double>(p.size());
  };

  LearnResult result;
  std::stable_sort(pop.begin(), pop.end(), by_loss);
  result.initial_mean_loss = mean_of(pop);
  Individual best = pop.front();
  result.best_loss_history.push_back(best.first);

  std::uniform_int_distribution<int> pick(0, config.population - 1);
  auto tournament = [&]() -> const Individual& {
    int winner = pick(rng);
    for (int i = 1; i < config.tournament; ++i) winner = std::min(winner, pick(rng));  // population is sorted
    return pop[winner];
  };

  for (int gen = 1; gen <= config.generations; ++gen) {
    const double progress = config.generations > 1 ? (gen - 1.0) / (config.generations - 1.0) : 1.0;
    const double sigma = 0.1 * std::pow(0.01, progress);
    std::vector<Individual> next(pop.begin(), pop.begin() + config.elitism);
    while (static_cast<int>(next.size()) < config.population) {
      const Individual& a = tournament();
      const Individual& b = tournament();
      std::vector<double> child = a.second;
      if (unit(rng) < config.crossover_rate) {
        for (std::size_t g = 0; g < genes; ++g) {
          if (unit(rng) < 0.5) child[g] = b.second[g];
        }
      }
      for (std::size_t g = 0; g < genes; ++g) {
        if (ranges[g].fixed()) continue;
        if (unit(rng) < config.mutation_rate) child[g] += gauss(rng) * sigma * (ranges[g].high - ranges[g].low);
      }
      clamp(child);
      double loss = problem.loss(child);
      next.emplace_back(loss, std::move(child));
    }
    pop = std::move(next);
    std::stable_sort(pop.begin(), pop.end(), by_loss);
    if (pop.front().first < best.first) best = pop.front();
    result.best_loss_history.push_back(best.first);
  }
  result.final_mean_loss = mean_of(pop);

  if (config.polish) {
    std::vector<double> step(genes);
    for (std::size_t g = 0; g < genes; ++g) step[g] = 0.1 * (ranges[g].high - ranges[g].low);
    for (int iter = 0; iter < 20000; ++iter) {
      bool improved = false, active = false;
      for (std::size_t g = 0; g < genes; ++g) {
        const double width = ranges[g].high - ranges[g].low;
        if (ranges[g].fixed() || step[g] <= 1e-13 * width) continue;
        active = true;
        for (double dir : {1.0, -1.0}) {
          std::vector<double> trial = best.second;
          trial[g] += dir * step[g];
          clamp(trial);
          double loss = problem.loss(trial);
          if (loss < best.first) {
            best = {loss, std::move(trial)};
            improved = true;
            break;
          }
        }
      }
      if (!active) break;
      if (!improved) {
        for (double& s : step) s *= 0.5;
      }
    }
  }

  result.x_min = best.second;
  result.loss = best.first;
  for (std::size_t t = 0; t < config.templates.size(); ++t) {
    result.functions.push_back({config.templates[t].ref, best.second[2 * t], best.second[2 * t + 1]});
  }
  return result;
}

std::string learned_to_json(const LearnResult& result) {
  detail::OrderedJson out = detail::OrderedJson::object();
  for (const auto& fn : result.functions) {
    out[fn.ref]["cpu"] = {{"alpha", fn.alpha}, {"beta", fn.beta}};
  }
  return out.dump(2) + "\n";
}

}  // namespace xflow

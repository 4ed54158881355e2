/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/mappings.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "xflow/catalog.hpp"
#include "xflow/error.hpp"

namespace xflow {

std::string Alternative::label() const {
  std::string out;
  for (const auto& op : ops) out += (out.empty() ? "" : "+") + op;
  return out;
}

double InflatedPlan::denoted_plans() const {
  double total = 1.0;
  for (const auto& op : ops) {
    std::size_t n = 0;
    for (const auto& alt : op.alternatives) n += alt.feasible ? 1 : 0;
    total *= static_cast<double>(n);
  }
  return total;
}

namespace {

bool node_matches(const PatternNode& node, const Operator& op) {
  if (node.kind != op.kind) return false;
  if (node.has_selectivity && *node.has_selectivity != op.selectivity.has_value()) return false;
  if (node.has_udf && *node.has_udf != !op.udf.empty()) return false;
  return true;
}

bool connected(const GraphPattern& pattern) {
  const int n = static_cast<int>(pattern.nodes.size());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (const auto& [a, b] : pattern.edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) return false;
    parent[find(a)] = find(b);
  }
  for (int i = 1; i < n; ++i) {
    if (find(i) != find(0)) return false;
  }
  return true;
}

}  // namespace

std::vector<Match> match(const GraphPattern& pattern, const RheemPlan& plan) {
  if (pattern.nodes.empty() || !connected(pattern)) {
    throw Error(ErrorCode::kInvalidArgument, "graph pattern must be nonempty and connected");
  }
  const int n = static_cast<int>(plan.size());
  std::vector<int> candidates(n);
  for (int i = 0; i < n; ++i) candidates[i] = i;
  std::sort(candidates.begin(), candidates.end(),
            [&](int a, int b) { return plan.op(a).id < plan.op(b).id; });

  std::set<std::pair<int, int>> adjacency;
  for (const Edge& e : plan.edges()) {
    if (!e.feedback) adjacency.emplace(plan.index_of(e.from), plan.index_of(e.to));
  }

  std::vector<Match> out;
  std::vector<int> binding(pattern.nodes.size(), -1);
  std::vector<char> used(n, 0);
  std::function<void(std::size_t)> extend = [&](std::size_t k) {
    if (k == pattern.nodes.size()) {
      Match m;
      for (int b : binding) m.push_back(plan.op(b).id);
      out.push_back(std::move(m));
      return;
    }
    for (int v : candidates) {
      if (used[v] || !node_matches(pattern.nodes[k], plan.op(v))) continue;
      bool ok = true;
      for (const auto& [a, b] : pattern.edges) {
        const std::size_t ua = a, ub = b;
        if (ua == k && ub < k && !adjacency.count({v, binding[ub]})) ok = false;
        if (ub == k && ua < k && !adjacency.count({binding[ua], v})) ok = false;
        if (ua == k && ub == k) ok = false;
      }
      if (!ok) continue;
      binding[k] = v;
      used[v] = 1;
      extend(k + 1);
      used[v] = 0;
      binding[k] = -1;
    }
  };
  extend(0);
  return out;
}

namespace {

struct Chain {
  std::vector<std::string> ops;
  std::vector<std::string> via;
};

class Inflater {
 public:
  Inflater(const PlatformCatalog& catalog) : catalog_(catalog) {
    for (const auto& m : catalog.mappings) {
      if (m.pattern.nodes.size() != 1) {
        throw Error(ErrorCode::kSchema, "mapping '" + m.id +
                                            "': multi-operator patterns are not supported by inflation");
      }
    }
    reach_.assign(catalog.channels.size(), std::vector<char>(catalog.channels.size(), 0));
    std::vector<std::vector<int>> succ(catalog.channels.size());
    for (const auto& c : catalog.conversions) {
      succ[catalog.channel_index(c.from)].push_back(catalog.channel_index(c.to));
    }
    for (std::size_t s = 0; s < succ.size(); ++s) {
      std::vector<int> stack{static_cast<int>(s)};
      reach_[s][s] = 1;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : succ[u]) {
          if (!reach_[s][v]) {
            reach_[s][v] = 1;
            stack.push_back(v);
          }
        }
      }
    }
  }

  std::vector<Chain> expand(const Operator& op, const std::string& kind, std::vector<std::string>& stack) {
    if (static_cast<int>(stack.size()) > kMaxDecompositionDepth) {
      std::string chain;
      for (const auto& k : stack) chain += k + " -> ";
      throw Error(ErrorCode::kCyclicMapping,
                  "decomposition deeper than " + std::to_string(kMaxDecompositionDepth) +
                      " (cyclic mapping set?): " + chain + kind);
    }
    Operator probe = op;
    probe.kind = kind;
    std::vector<Chain> out;
    for (const auto& m : catalog_.mappings) {
      if (!node_matches(m.pattern.nodes[0], probe)) continue;
      std::vector<Chain> partial{Chain{}};
      for (const auto& step : m.substitute) {
        std::vector<Chain> options;
        if (!step.exec_op.empty()) {
          options.push_back(Chain{{step.exec_op}, {}});
        } else {
          stack.push_back(kind);
          options = expand(op, step.kind, stack);
          stack.pop_back();
          for (auto& o : options) o.via.insert(o.via.begin(), step.kind);
        }
        std::vector<Chain> next;
        for (const auto& p : partial) {
          for (const auto& o : options) {
            Chain c = p;
            c.ops.insert(c.ops.end(), o.ops.begin(), o.ops.end());
            c.via.insert(c.via.end(), o.via.begin(), o.via.end());
            next.push_back(std::move(c));
          }
        }
        partial = std::move(next);
      }
      out.insert(out.end(), partial.begin(), partial.end());
    }
    return out;
  }

  // Fills the structural fields; false when the chain cannot be wired.
  bool resolve(const Operator& op, Alternative& alt) const {
    for (const auto& id : alt.ops) {
      int idx = catalog_.operator_index(id);
      alt.op_indices.push_back(idx);
      alt.platforms |= std::uint64_t{1} << catalog_.platform_index(catalog_.operators[idx].platform);
    }
    const ExecutionOperator& first = catalog_.operators[alt.op_indices.front()];
    const ExecutionOperator& last = catalog_.operators[alt.op_indices.back()];
    for (int s = 0; s < op.inputs; ++s) {
      auto set = catalog_.input_set(first, s);
      if (set.empty()) return false;
      alt.input_sets.push_back(std::move(set));
    }
    for (int s = 0; s < op.outputs; ++s) {
      int c = catalog_.output_channel(last, s);
      if (c < 0) return false;
      alt.output_channels.push_back(c);
    }
    for (std::size_t i = 0; i + 1 < alt.op_indices.size(); ++i) {
      int out = catalog_.output_channel(catalog_.operators[alt.op_indices[i]], 0);
      auto in = catalog_.input_set(catalog_.operators[alt.op_indices[i + 1]], 0);
      if (out < 0 || in.empty()) return false;
      bool reachable = false;
      for (int c : in) reachable = reachable || reach_[out][c];
      if (!reachable) return false;
    }
    return true;
  }

 private:
  const PlatformCatalog& catalog_;
  std::vector<std::vector<char>> reach_;
};

}  // namespace

InflatedPlan inflate(const RheemPlan& plan, const PlatformCatalog& catalog) {
  auto report = validate_plan(plan);
  if (!report.empty()) throw Error(ErrorCode::kInvalidPlan, "cannot inflate an invalid plan: " + report.front().message);
  Inflater inflater(catalog);
  InflatedPlan out;
  out.plan = plan;
  out.multiplier = iteration_multipliers(plan);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Operator& op = plan.op(static_cast<int>(i));
    std::vector<std::string> stack;
    auto chains = inflater.expand(op, op.kind, stack);
    // Canonical: one entry per distinct operator chain, ordered by label.
    std::map<std::vector<std::string>, std::vector<std::string>> unique;
    for (auto& c : chains) {
      auto it = unique.find(c.ops);
      if (it == unique.end() || c.via < it->second) unique[c.ops] = c.via;
    }
    InflatedOperator inf;
    inf.index = static_cast<int>(i);
    inf.id = op.id;
    inf.kind = op.kind;
    inf.inputs = op.inputs;
    inf.outputs = op.outputs;
    for (const auto& [ops, via] : unique) {
      Alternative alt;
      alt.ops = ops;
      alt.via = via;
      if (inflater.resolve(op, alt)) inf.alternatives.push_back(std::move(alt));
    }
    std::sort(inf.alternatives.begin(), inf.alternatives.end(),
              [](const Alternative& a, const Alternative& b) { return a.label() < b.label(); });
    if (inf.alternatives.empty()) {
      throw Error(ErrorCode::kUncoverableOperator,
                  "UncoverableOperator(" + op.kind + "): no executable alternative for operator '" + op.id + "'");
    }
    out.ops.push_back(std::move(inf));
  }
  return out;
}

std::string canonical_form(const InflatedPlan& plan) {
  std::ostringstream os;
  for (const auto& op : plan.ops) {
    os << op.id << " [" << op.kind << "]";
    for (const auto& alt : op.alternatives) {
      os << " | " << alt.label();
      if (!alt.via.empty()) {
        os << " via";
        for (const auto& v : alt.via) os << " " << v;
      }
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace xflow

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/plan.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "xflow/error.hpp"

namespace xflow {

namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kSchema, path + ": cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace detail

std::optional<KindInfo> known_kind(std::string_view kind) {
  static const std::map<std::string, KindInfo, std::less<>> kinds = {
      {"TextSource", {0, 1, false}},     {"TextFileSource", {0, 1, false}},
      {"CollectionSource", {0, 1, false}}, {"TableSource", {0, 1, false}},
      {"Sink", {1, 0, false}},           {"CollectionSink", {1, 0, false}},
      {"TextFileSink", {1, 0, false}},   {"Map", {1, 1, false}},
      {"Filter", {1, 1, false}},         {"FlatMap", {1, 1, false}},
      {"ReduceBy", {1, 1, false}},       {"GroupBy", {1, 1, false}},
      {"Reduce", {1, 1, false}},         {"Distinct", {1, 1, false}},
      {"Sort", {1, 1, false}},           {"Count", {1, 1, false}},
      {"MapPartitions", {1, 1, false}},  {"Sample", {1, 1, false}},
      {"Join", {2, 1, false}},           {"Union", {2, 1, false}},
      {"Cartesian", {2, 1, false}},      {"CoGroup", {2, 1, false}},
      {"RepeatLoop", {2, 2, true}},      {"DoWhile", {2, 2, true}},
      {"Loop", {2, 2, true}},
  };
  auto it = kinds.find(kind);
  if (it == kinds.end()) return std::nullopt;
  return it->second;
}

bool is_loop_kind(std::string_view kind) {
  auto info = known_kind(kind);
  return info && info->loop;
}

RheemPlan::RheemPlan(std::vector<Operator> operators, std::vector<Edge> edges)
    : operators_(std::move(operators)), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < operators_.size(); ++i) {
    index_.emplace(operators_[i].id, static_cast<int>(i));
  }
  out_edges_.assign(operators_.size(), {});
  in_edges_.assign(operators_.size(), {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    int from = index_of(edges_[e].from);
    int to = index_of(edges_[e].to);
    if (from >= 0) out_edges_[from].push_back(static_cast<int>(e));
    if (to >= 0) in_edges_[to].push_back(static_cast<int>(e));
  }
}

int RheemPlan::index_of(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? -1 : it->second;
}

namespace {

bool has_terminal(const RheemPlan& plan) {
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan.op(static_cast<int>(i)).is_sink() || plan.out_edges()[i].empty()) return true;
  }
  return false;
}

// Kahn's algorithm over non-feedback edges; returns nodes left on a cycle.
std::vector<int> cyclic_nodes(const RheemPlan& plan) {
  const int n = static_cast<int>(plan.size());
  std::vector<int> indegree(n, 0);
  for (const Edge& e : plan.edges()) {
    int from = plan.index_of(e.from), to = plan.index_of(e.to);
    if (!e.feedback && from >= 0 && to >= 0) ++indegree[to];
  }
  std::vector<int> stack;
  for (int i = 0; i < n; ++i) {
    if (indegree[i] == 0) stack.push_back(i);
  }
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int e : plan.out_edges()[u]) {
      const Edge& edge = plan.edges()[e];
      int to = plan.index_of(edge.to);
      if (edge.feedback || to < 0) continue;
      if (--indegree[to] == 0) stack.push_back(to);
    }
  }
  std::vector<int> left;
  for (int i = 0; i < n; ++i) {
    if (indegree[i] > 0) left.push_back(i);
  }
  return left;
}

}  // namespace

ValidationReport validate_plan(const RheemPlan& plan) {
  ValidationReport report;
  auto add = [&](const char* code, const std::string& message) {
    report.push_back({code, message});
  };

  std::set<std::string> seen;
  for (const Operator& op : plan.operators()) {
    if (op.id.empty()) add("empty id", "operator with empty id");
    if (!seen.insert(op.id).second) add("duplicate id", "duplicate operator id '" + op.id + "'");
    if (op.inputs < 0 || op.outputs < 0) add("bad arity", "operator '" + op.id + "' has negative arity");
    if (op.selectivity && !(*op.selectivity >= 0.0)) {
      add("bad selectivity", "operator '" + op.id + "' has a negative selectivity");
    }
    if (op.iterations && !(*op.iterations > 0.0)) {
      add("bad iterations", "operator '" + op.id + "' has a nonpositive iteration count");
    }
  }
  if (plan.size() == 0 || !has_terminal(plan)) add("no sink", "plan must contain a sink");

  bool edges_ok = true;
  std::vector<std::vector<int>> slot_count(plan.size());
  for (std::size_t i = 0; i < plan.size(); ++i) slot_count[i].assign(std::max(0, plan.op(i).inputs), 0);
  for (std::size_t e = 0; e < plan.edges().size(); ++e) {
    const Edge& edge = plan.edges()[e];
    const std::string where = "edge " + std::to_string(e) + " (" + edge.from + " -> " + edge.to + ")";
    int from = plan.index_of(edge.from), to = plan.index_of(edge.to);
    if (from < 0 || to < 0) {
      add("dangling edge", where + " references an unknown operator");
      edges_ok = false;
      continue;
    }
    if (edge.from_slot < 0 || edge.from_slot >= plan.op(from).outputs) {
      add("bad slot", where + " uses output slot " + std::to_string(edge.from_slot) + " of '" + edge.from + "'");
      edges_ok = false;
    }
    if (edge.to_slot < 0 || edge.to_slot >= plan.op(to).inputs) {
      add("bad slot", where + " uses input slot " + std::to_string(edge.to_slot) + " of '" + edge.to + "'");
      edges_ok = false;
    } else {
      ++slot_count[to][edge.to_slot];
    }
    if (edge.feedback && !is_loop_kind(plan.op(to).kind)) {
      add("feedback into non-loop", where + " is a feedback edge into non-loop operator '" + edge.to + "'");
    }
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    for (std::size_t s = 0; s < slot_count[i].size(); ++s) {
      if (slot_count[i][s] != 1) {
        add("input slot", "input slot " + std::to_string(s) + " of '" + plan.op(i).id + "' has " +
                              std::to_string(slot_count[i][s]) + " incoming edges (expected 1)");
      }
    }
  }

  auto cycle = cyclic_nodes(plan);
  if (!cycle.empty()) {
    std::string ids;
    for (int i : cycle) ids += (ids.empty() ? "" : ", ") + plan.op(i).id;
    add("cycle outside loop", "cycle outside loop through {" + ids + "}");
  }

  // Reachability from sources over all edges.
  std::vector<char> reached(plan.size(), 0);
  std::vector<int> stack;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (plan.op(i).is_source()) {
      reached[i] = 1;
      stack.push_back(static_cast<int>(i));
    }
  }
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int e : plan.out_edges()[u]) {
      int to = plan.index_of(plan.edges()[e].to);
      if (to >= 0 && !reached[to]) {
        reached[to] = 1;
        stack.push_back(to);
      }
    }
  }
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!reached[i]) add("unreachable from source", "operator '" + plan.op(i).id + "' is unreachable from source");
  }

  if (edges_ok && cycle.empty()) {
    auto bodies = loop_bodies(plan);
    std::vector<int> owner(plan.size(), -1);
    for (const auto& [head, body] : bodies) {
      for (int v : body) {
        if (owner[v] < 0) {
          owner[v] = head;
          continue;
        }
        const auto& other = bodies.at(owner[v]);
        bool nested = std::binary_search(other.begin(), other.end(), head) ||
                      std::binary_search(body.begin(), body.end(), owner[v]);
        if (!nested) {
          add("overlapping loops", "operator '" + plan.op(v).id + "' belongs to the bodies of two unrelated loops");
        }
      }
    }
  }
  return report;
}

std::map<int, std::vector<int>> loop_bodies(const RheemPlan& plan) {
  std::map<int, std::vector<int>> bodies;
  const int n = static_cast<int>(plan.size());
  for (int head = 0; head < n; ++head) {
    if (!is_loop_kind(plan.op(head).kind)) continue;
    std::vector<char> forward(n, 0), backward(n, 0);
    std::vector<int> stack{head};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int e : plan.out_edges()[u]) {
        const Edge& edge = plan.edges()[e];
        int to = plan.index_of(edge.to);
        if (edge.feedback || to < 0 || to == head || forward[to]) continue;
        forward[to] = 1;
        stack.push_back(to);
      }
    }
    for (int e : plan.in_edges()[head]) {
      const Edge& edge = plan.edges()[e];
      int from = plan.index_of(edge.from);
      if (edge.feedback && from >= 0 && !backward[from]) {
        backward[from] = 1;
        stack.push_back(from);
      }
    }
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int e : plan.in_edges()[u]) {
        const Edge& edge = plan.edges()[e];
        int from = plan.index_of(edge.from);
        if (edge.feedback || from < 0 || from == head || backward[from]) continue;
        backward[from] = 1;
        stack.push_back(from);
      }
    }
    std::vector<int>& body = bodies[head];
    for (int v = 0; v < n; ++v) {
      if (v != head && forward[v] && backward[v]) body.push_back(v);
    }
  }
  return bodies;
}

std::vector<double> iteration_multipliers(const RheemPlan& plan) {
  std::vector<double> mult(plan.size(), 1.0);
  for (const auto& [head, body] : loop_bodies(plan)) {
    double iterations = plan.op(head).iterations.value_or(1.0);
    for (int v : body) mult[v] *= iterations;
  }
  return mult;
}

namespace {

void order_group(const RheemPlan& plan, const std::map<int, std::vector<int>>& bodies,
                 const std::vector<int>& members, int enclosing_head, std::vector<int>& out) {
  const int n = static_cast<int>(plan.size());
  std::vector<char> in_set(n, 0);
  for (int v : members) in_set[v] = 1;

  // Top-level loops of this member set and the group each member belongs to.
  std::vector<int> group(n, -1);
  for (int v : members) group[v] = v;
  for (int v : members) {
    auto it = bodies.find(v);
    if (it == bodies.end() || v == enclosing_head) continue;
    bool top_level = true;
    for (int w : members) {
      if (w == v || w == enclosing_head) continue;
      auto jt = bodies.find(w);
      if (jt != bodies.end() && std::binary_search(jt->second.begin(), jt->second.end(), v)) {
        top_level = false;
        break;
      }
    }
    if (!top_level) continue;
    for (int b : it->second) {
      if (in_set[b]) group[b] = v;
    }
  }

  std::map<int, std::set<int>> succ;
  std::map<int, int> indegree;
  for (int v : members) indegree.emplace(group[v], 0);
  for (int v : members) {
    for (int e : plan.out_edges()[v]) {
      const Edge& edge = plan.edges()[e];
      int to = plan.index_of(edge.to);
      if (edge.feedback || to < 0 || !in_set[to]) continue;
      int gu = group[v], gv = group[to];
      if (gu != gv && succ[gu].insert(gv).second) ++indegree[gv];
    }
  }

  auto by_id = [&](int a, int b) { return plan.op(a).id > plan.op(b).id; };
  std::priority_queue<int, std::vector<int>, decltype(by_id)> ready(by_id);
  for (const auto& [g, d] : indegree) {
    if (d == 0) ready.push(g);
  }
  while (!ready.empty()) {
    int g = ready.top();
    ready.pop();
    out.push_back(g);
    auto it = bodies.find(g);
    if (it != bodies.end() && g != enclosing_head && group[g] == g) {
      std::vector<int> body;
      for (int b : it->second) {
        if (in_set[b] && group[b] == g) body.push_back(b);
      }
      if (!body.empty()) order_group(plan, bodies, body, g, out);
    }
    for (int s : succ[g]) {
      if (--indegree[s] == 0) ready.push(s);
    }
  }
}

}  // namespace

std::vector<int> topo_order_indices(const RheemPlan& plan) {
  auto report = validate_plan(plan);
  if (!report.empty()) {
    throw Error(ErrorCode::kInvalidPlan, "cannot order an invalid plan: " + report.front().message);
  }
  std::vector<int> all(plan.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  std::vector<int> out;
  out.reserve(plan.size());
  order_group(plan, loop_bodies(plan), all, -1, out);
  return out;
}

std::vector<std::string> topo_order(const RheemPlan& plan) {
  std::vector<std::string> ids;
  for (int i : topo_order_indices(plan)) ids.push_back(plan.op(i).id);
  return ids;
}

RheemPlan parse_plan(std::string_view text) {
  using namespace detail;
  Json doc = parse_json(text, "plan");
  const std::string root = "plan";
  if (!doc.is_object()) schema_error(root, "expected an object");
  const Json& ops = get_array(doc, "operators", root);
  std::vector<Operator> operators;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const std::string path = index_path(root, "operators", i);
    const Json& o = ops[i];
    Operator op;
    op.id = get_string(o, "id", path);
    op.kind = get_string(o, "kind", path);
    op.udf = opt_string(o, "udf", path).value_or("");
    op.selectivity = opt_number(o, "selectivity", path);
    op.iterations = opt_number(o, "iterations", path);
    auto info = known_kind(op.kind);
    auto inputs = opt_int(o, "inputs", path);
    auto outputs = opt_int(o, "outputs", path);
    if (!info && (!inputs || !outputs)) {
      schema_error(path, "unknown kind '" + op.kind + "' requires explicit inputs and outputs");
    }
    op.inputs = inputs.value_or(info ? info->inputs : 1);
    op.outputs = outputs.value_or(info ? info->outputs : 1);
    if (op.inputs < 0 || op.outputs < 0) schema_error(path, "arity must be nonnegative");
    if (op.selectivity && *op.selectivity < 0) schema_error(path + ".selectivity", "must be >= 0");
    if (op.iterations && *op.iterations <= 0) schema_error(path + ".iterations", "must be > 0");
    operators.push_back(std::move(op));
  }
  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const Json& es = get_array(doc, "edges", root);
    for (std::size_t i = 0; i < es.size(); ++i) {
      const std::string path = index_path(root, "edges", i);
      const Json& e = es[i];
      Edge edge;
      edge.from = get_string(e, "from", path);
      edge.to = get_string(e, "to", path);
      edge.from_slot = opt_int(e, "fromSlot", path).value_or(0);
      edge.to_slot = opt_int(e, "toSlot", path).value_or(0);
      edge.feedback = opt_bool(e, "feedback", path, false);
      edges.push_back(std::move(edge));
    }
  }
  RheemPlan plan(std::move(operators), std::move(edges));
  if (plan.size() == 0 || !has_terminal(plan)) schema_error(root + ".operators", "plan must contain a sink");
  return plan;
}

std::string serialize_plan(const RheemPlan& plan) {
  using detail::OrderedJson;
  OrderedJson doc;
  doc["operators"] = OrderedJson::array();
  for (const Operator& op : plan.operators()) {
    OrderedJson o;
    o["id"] = op.id;
    o["kind"] = op.kind;
    if (!op.udf.empty()) o["udf"] = op.udf;
    if (op.selectivity) o["selectivity"] = *op.selectivity;
    if (op.iterations) o["iterations"] = *op.iterations;
    auto info = known_kind(op.kind);
    if (!info || info->inputs != op.inputs || info->outputs != op.outputs) {
      o["inputs"] = op.inputs;
      o["outputs"] = op.outputs;
    }
    doc["operators"].push_back(std::move(o));
  }
  doc["edges"] = OrderedJson::array();
  for (const Edge& e : plan.edges()) {
    OrderedJson o;
    o["from"] = e.from;
    o["fromSlot"] = e.from_slot;
    o["to"] = e.to;
    o["toSlot"] = e.to_slot;
    if (e.feedback) o["feedback"] = true;
    doc["edges"].push_back(std::move(o));
  }
  return doc.dump(2) + "\n";
}

RheemPlan load_plan(const std::string& path) {
  try {
    return parse_plan(detail::read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

}  // namespace xflow

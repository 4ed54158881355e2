/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace xflow {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

namespace {

std::string interval(const IntervalEstimate& e) {
  return "[" + format_number(e.low) + ", " + format_number(e.high) + "]@" + format_number(e.confidence);
}

}  // namespace

std::string format_plan(const ExecutionPlan& plan) {
  std::ostringstream os;
  os << "cost: " << format_number(plan.breakdown.total) << " " << interval(plan.cost) << "\n";
  os << "platforms:";
  for (const auto& p : plan.platforms) os << " " << p;
  os << "\noperators:\n";
  for (const auto& op : plan.operators) {
    os << "  " << op.id << " [" << op.kind << "] = " << op.alternative << " on";
    for (const auto& p : op.platforms) os << " " << p;
    os << ", in " << interval(op.input_cardinality) << ", cost " << format_number(op.scalar) << "\n";
  }
  os << "movement:\n";
  for (const auto& c : plan.conversions) {
    os << "  " << c.producer << ":" << c.slot << " " << c.root_channel << " ->";
    for (const auto& [consumer, channel] : c.consumers) os << " " << consumer << "@" << channel;
    os << ", cost " << format_number(c.scalar);
    if (!c.edges.empty()) {
      os << ", via";
      for (const auto& e : c.edges) os << " " << e;
    }
    os << "\n";
  }
  return os.str();
}

std::string format_explain(const ExecutionPlan& plan, const PhaseTimings& timings, bool omit_timings) {
  std::ostringstream os;
  auto ms = [&](double v) {
    if (omit_timings) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  os << "phases (ms):\n";
  os << "  inflation: " << ms(timings.inflation_ms) << "\n";
  os << "  cardinality: " << ms(timings.cardinality_ms) << "\n";
  os << "  mct: " << ms(timings.mct_ms) << "\n";
  os << "  enumeration: " << ms(timings.enumeration_ms) << "\n";
  os << "breakdown:\n";
  os << "  operators: " << format_number(plan.breakdown.operators) << "\n";
  os << "  movement: " << format_number(plan.breakdown.movement) << "\n";
  os << "  startup: " << format_number(plan.breakdown.startup) << "\n";
  os << "  total: " << format_number(plan.breakdown.total) << "\n";
  os << "search:\n";
  os << "  subplans: " << plan.stats.subplans_created << "\n";
  os << "  pruned: " << plan.stats.subplans_pruned << "\n";
  os << "  largest enumeration: " << plan.stats.max_enumeration << "\n";
  os << "  join groups: " << plan.stats.join_groups << "\n";
  os << "  mct queries: " << plan.stats.mct_queries << "\n";
  return os.str();
}

std::string format_tree(const ConversionTree& tree, const ChannelConversionGraph& ccg) {
  std::ostringstream os;
  os << "root: " << ccg.channels()[tree.root].id << "\n";
  os << "cost: " << format_number(tree.cost) << " [" << format_number(tree.cost_interval.low) << ", "
     << format_number(tree.cost_interval.high) << "]\n";
  os << "edges:\n";
  std::vector<std::string> lines;
  for (int e : tree.edges) {
    const auto& edge = ccg.edges()[e];
    lines.push_back("  " + ccg.channels()[edge.from].id + " -> " + ccg.channels()[edge.to].id + " (" + edge.op + ")");
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) os << l << "\n";
  os << "targets:\n";
  for (std::size_t i = 0; i < tree.target_channel.size(); ++i) {
    os << "  " << i << ": " << ccg.channels()[tree.target_channel[i]].id << "\n";
  }
  return os.str();
}

}  // namespace xflow

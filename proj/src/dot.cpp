/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/dot.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace xflow {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

}  // namespace

std::string emit_dot(const ExecutionPlan& plan) {
  std::ostringstream os;
  os << "digraph execution_plan {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n";
  for (const auto& op : plan.operators) {
    os << "  " << quote(op.id) << " [label=" << quote(op.id + "\n" + op.alternative + "\n[" + join(op.platforms, ",") + "]")
       << "];\n";
  }
  for (const auto& conv : plan.conversions) {
    if (conv.edges.empty()) {
      for (const auto& [consumer, channel] : conv.consumers) {
        os << "  " << quote(conv.producer) << " -> " << quote(consumer.substr(0, consumer.rfind(':')))
           << " [label=" << quote(channel) << "];\n";
      }
      continue;
    }
    const std::string prefix = conv.producer + ":" + std::to_string(conv.slot) + "/";
    for (const auto& ch : conv.channels) {
      os << "  " << quote(prefix + ch) << " [label=" << quote(ch) << ", shape=ellipse, style=solid];\n";
    }
    os << "  " << quote(conv.producer) << " -> " << quote(prefix + conv.root_channel) << ";\n";
    int k = 0;
    for (const auto& e : conv.edges) {
      const auto arrow = e.find("->");
      const auto hash = e.find('#');
      const std::string from = e.substr(0, arrow);
      const std::string to = e.substr(arrow + 2, hash - arrow - 2);
      const std::string node = prefix + "conv" + std::to_string(k++);
      os << "  " << quote(node) << " [label=" << quote(e.substr(hash + 1)) << ", shape=box, style=dashed];\n";
      os << "  " << quote(prefix + from) << " -> " << quote(node) << " [style=dashed];\n";
      os << "  " << quote(node) << " -> " << quote(prefix + to) << " [style=dashed];\n";
    }
    for (const auto& [consumer, channel] : conv.consumers) {
      os << "  " << quote(prefix + channel) << " -> " << quote(consumer.substr(0, consumer.rfind(':'))) << ";\n";
    }
  }
  os << "}\n";
  return os.str();
}

std::string emit_dot(const InflatedPlan& plan) {
  std::ostringstream os;
  os << "digraph inflated_plan {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& op : plan.ops) {
    std::vector<std::string> alts;
    for (const auto& a : op.alternatives) alts.push_back(a.label());
    os << "  " << quote(op.id) << " [label=" << quote(op.id + " [" + op.kind + "]\n" + join(alts, "\n")) << "];\n";
  }
  for (const auto& e : plan.plan.edges()) {
    os << "  " << quote(e.from) << " -> " << quote(e.to);
    if (e.feedback) os << " [style=dashed, constraint=false]";
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

std::string emit_dot(const ConversionTree& tree, const ChannelConversionGraph& ccg) {
  std::ostringstream os;
  os << "digraph conversion_tree {\n  rankdir=LR;\n";
  std::map<int, int> served;
  for (int c : tree.target_channel) {
    if (c >= 0) ++served[c];
  }
  for (int c : tree.channels(ccg)) {
    const auto& ch = ccg.channels()[c];
    os << "  " << quote(ch.id) << " [shape=" << (ch.reusable ? "box" : "ellipse");
    if (c == tree.root) os << ", penwidth=2";
    if (served.count(c)) os << ", peripheries=2";
    os << "];\n";
  }
  std::vector<std::string> lines;
  for (int e : tree.edges) {
    const auto& edge = ccg.edges()[e];
    lines.push_back("  " + quote(ccg.channels()[edge.from].id) + " -> " + quote(ccg.channels()[edge.to].id) +
                    " [label=" + quote(edge.op) + ", style=dashed];\n");
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) os << l;
  os << "}\n";
  return os.str();
}

}  // namespace xflow

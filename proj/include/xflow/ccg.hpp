/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xflow/cost_function.hpp"
#include "xflow/interval.hpp"

namespace xflow {

class PlatformCatalog;

struct CcgChannel {
  std::string id;
  bool reusable = false;
};

/// Conversion edge; its cost is the conversion operator's cost at the
/// cardinality of the moved data.
struct CcgEdge {
  int from = 0;
  int to = 0;
  std::string op;
  CostFunction cost;
  UnitCosts units = kUnitCostsOne;
};

class ChannelConversionGraph {
 public:
  ChannelConversionGraph() = default;
  ChannelConversionGraph(std::vector<CcgChannel> channels, std::vector<CcgEdge> edges);

  static ChannelConversionGraph from_catalog(const PlatformCatalog& catalog);

  const std::vector<CcgChannel>& channels() const { return channels_; }
  const std::vector<CcgEdge>& edges() const { return edges_; }
  const std::vector<int>& out_edges(int channel) const { return out_[channel]; }
  bool reusable(int channel) const { return channels_[channel].reusable; }
  int index_of(std::string_view id) const;

  /// Interval cost of every edge at `cardinality`.
  std::vector<IntervalEstimate> price(const IntervalEstimate& cardinality) const;

 private:
  std::vector<CcgChannel> channels_;
  std::vector<CcgEdge> edges_;
  std::vector<std::vector<int>> out_;
};

/// Channels acceptable to one consumer input (sorted channel indices).
using TargetSet = std::vector<int>;

struct Kernelized {
  std::vector<TargetSet> sets;
  std::vector<int> origin;  // kernel set index of every input set
};

/// Merges identical target sets that hold at most one non-reusable and at least
/// one reusable channel into a single set of their reusable channels.
Kernelized kernelize(const ChannelConversionGraph& ccg, const std::vector<TargetSet>& sets);

/// Rooted conversion tree. `target_channel[i]` is the channel in the tree that
/// serves input target set i.
struct ConversionTree {
  int root = -1;
  std::vector<int> edges;
  std::vector<int> target_channel;
  IntervalEstimate cost_interval{0.0, 0.0, 1.0};
  double cost = 0.0;  // scalar comparison value: sum of edge midpoints

  /// Sorted edge list, used to break ties between equal-cost trees.
  std::string canonical(const ChannelConversionGraph& ccg) const;
  std::vector<int> channels(const ChannelConversionGraph& ccg) const;
};

/// Exact minimum conversion tree: kernelization followed by the recursive
/// visit / forward-traversal / merge search. Throws kNoConversionTree when no
/// tree satisfies every target set.
ConversionTree find_mct(const ChannelConversionGraph& ccg, int root, const std::vector<TargetSet>& targets,
                        const IntervalEstimate& cardinality);
ConversionTree find_mct(const ChannelConversionGraph& ccg, int root, const std::vector<TargetSet>& targets,
                        const std::vector<IntervalEstimate>& edge_costs);

inline constexpr std::size_t kBruteForceChannelLimit = 12;

/// Exhaustive oracle over all rooted subtrees of the CCG. Throws
/// kInstanceTooLarge beyond kBruteForceChannelLimit channels.
ConversionTree brute_force_mct(const ChannelConversionGraph& ccg, int root,
                               const std::vector<TargetSet>& targets, const IntervalEstimate& cardinality);
ConversionTree brute_force_mct(const ChannelConversionGraph& ccg, int root,
                               const std::vector<TargetSet>& targets,
                               const std::vector<IntervalEstimate>& edge_costs);

/// Checks both structural conditions (rooted tree reaching every set, single
/// successor for non-reusable channels). Returns an empty string when valid.
std::string check_conversion_tree(const ChannelConversionGraph& ccg, const ConversionTree& tree,
                                  const std::vector<TargetSet>& targets);

}  // namespace xflow

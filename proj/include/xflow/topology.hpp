/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <string>

#include "xflow/catalog.hpp"
#include "xflow/costmodel.hpp"
#include "xflow/plan.hpp"

namespace xflow {

enum class Topology { kPipeline, kFanout, kTree };

/// Throws kInvalidArgument for anything but pipeline, fanout, tree.
Topology parse_topology(const std::string& name);
std::string to_string(Topology t);

/// Integer cost ranges so that every plan cost is an exact sum.
struct TopologyOptions {
  int min_operator_cost = 1;
  int max_operator_cost = 100;
  int max_conversion_cost = 20;
  int max_cross_cost = 40;
  int max_startup = 30;
  double source_cardinality = 1000;
};

/// A synthetic plan together with the catalog and source stats it needs.
/// Every operator has k alternatives, alternative j running on platform Pj.
/// Each platform offers a stream (non-reusable), a collection and a file
/// channel; platforms exchange data through files.
struct SyntheticInstance {
  RheemPlan plan;
  PlatformCatalog catalog;
  SourceStats stats;
};

/// pipeline: source, n-2 maps, sink. fanout: one source feeding n-1 sinks.
/// tree: complete binary tree of joins over 2^(h-1) sources, n = 2^h - 1.
/// Throws kInvalidArgument for n < 1, k < 1 or a non-complete tree size.
SyntheticInstance generate_topology(Topology kind, int n, int k, std::uint64_t seed,
                                    const TopologyOptions& options = {});

}  // namespace xflow

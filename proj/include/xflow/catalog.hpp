/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xflow/cost_function.hpp"
#include "xflow/mappings.hpp"

namespace xflow {

/// Start-up cost and unit resource costs of one processing platform.
struct PlatformProfile {
  std::string id;
  double startup = 0.0;
  UnitCosts unit_costs = kUnitCostsOne;
  int cores = 1;
  int nodes = 1;
};

/// Unit costs derived from the hardware block when none are given.
UnitCosts derive_unit_costs(int cores, int nodes);

struct Channel {
  std::string id;
  bool reusable = false;
};

struct ExecutionOperator {
  std::string id;
  std::string platform;
  std::vector<std::string> implements;
  std::vector<std::vector<std::string>> input_channels;  // per input slot; last entry repeats
  std::vector<std::string> output_channels;              // per output slot; last entry repeats
  std::string cost_ref;
};

/// Conversion operator: a costed CCG edge.
struct Conversion {
  std::string id;
  std::string from;
  std::string to;
  std::string platform;  // optional; unit costs default to 1
  std::string cost_ref;
};

/// Everything the optimizer knows about the available platforms, cross-
/// referenced by id. Build one with load_catalog or by filling the vectors and
/// calling finalize().
class PlatformCatalog {
 public:
  std::vector<PlatformProfile> platforms;
  std::vector<Channel> channels;
  std::vector<ExecutionOperator> operators;
  std::vector<Conversion> conversions;
  std::vector<OperatorMapping> mappings;
  std::map<std::string, CostFunction> cost_functions;

  /// Builds id indices and checks referential integrity. Throws kSchema
  /// naming the dangling reference, kUnknownCostFunction for cost refs.
  void finalize(bool require_platforms = true);

  int platform_index(std::string_view id) const;
  int channel_index(std::string_view id) const;
  int operator_index(std::string_view id) const;

  const CostFunction& cost_function(std::string_view ref) const;
  UnitCosts unit_costs(std::string_view platform) const;

  /// Channels accepted by input `slot` of an execution operator (indices).
  std::vector<int> input_set(const ExecutionOperator& op, int slot) const;
  int output_channel(const ExecutionOperator& op, int slot) const;

 private:
  std::map<std::string, int, std::less<>> platform_index_;
  std::map<std::string, int, std::less<>> channel_index_;
  std::map<std::string, int, std::less<>> operator_index_;
};

/// Parses one catalog document. `include` entries are resolved relative to
/// `base_dir` and merged in order.
PlatformCatalog parse_catalog(std::string_view text, const std::string& base_dir = ".",
                              bool require_platforms = true);
PlatformCatalog load_catalog(const std::string& path, bool require_platforms = true);
/// Merges several catalog files (e.g. operators, CCG, profiles) into one.
PlatformCatalog load_catalog(const std::vector<std::string>& paths, bool require_platforms = true);

}  // namespace xflow

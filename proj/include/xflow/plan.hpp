/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xflow {

/// Arity and role of a known operator kind. Unknown kinds must state their
/// arity explicitly in the plan file.
struct KindInfo {
  int inputs = 1;
  int outputs = 1;
  bool loop = false;
};

std::optional<KindInfo> known_kind(std::string_view kind);
bool is_loop_kind(std::string_view kind);

/// One platform-agnostic operator instance.
struct Operator {
  std::string id;
  std::string kind;
  std::string udf;                     // opaque tag naming the user function
  std::optional<double> selectivity;   // dimensionless, may exceed 1
  std::optional<double> iterations;    // loop kinds only; defaults to 1
  int inputs = 1;
  int outputs = 1;

  bool is_source() const { return inputs == 0; }
  bool is_sink() const { return outputs == 0; }
  bool operator==(const Operator&) const = default;
};

/// Directed dataflow edge between an output slot and an input slot.
struct Edge {
  std::string from;
  int from_slot = 0;
  std::string to;
  int to_slot = 0;
  bool feedback = false;

  bool operator==(const Edge&) const = default;
};

struct Violation {
  std::string code;     // short stable tag, e.g. "unreachable from source"
  std::string message;  // human readable, names the offending ids
};

using ValidationReport = std::vector<Violation>;

/// Platform-agnostic plan graph. Immutable once built; the index accessors
/// resolve ids in O(log n).
class RheemPlan {
 public:
  RheemPlan() = default;
  RheemPlan(std::vector<Operator> operators, std::vector<Edge> edges);

  const std::vector<Operator>& operators() const { return operators_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t size() const { return operators_.size(); }

  /// Index of the operator with this id, or -1.
  int index_of(std::string_view id) const;
  const Operator& op(int index) const { return operators_.at(index); }

  /// Edge indices grouped per operator index.
  const std::vector<std::vector<int>>& out_edges() const { return out_edges_; }
  const std::vector<std::vector<int>>& in_edges() const { return in_edges_; }

  bool operator==(const RheemPlan& other) const {
    return operators_ == other.operators_ && edges_ == other.edges_;
  }

 private:
  std::vector<Operator> operators_;
  std::vector<Edge> edges_;
  std::map<std::string, int, std::less<>> index_;
  std::vector<std::vector<int>> out_edges_;
  std::vector<std::vector<int>> in_edges_;
};

ValidationReport validate_plan(const RheemPlan& plan);

/// Loop body of every loop head: the operators lying on a path from the head
/// back to one of its feedback edges, excluding the head itself. Sorted.
std::map<int, std::vector<int>> loop_bodies(const RheemPlan& plan);

/// Product of the iteration counts of all loops whose body contains each
/// operator (1 outside loops).
std::vector<double> iteration_multipliers(const RheemPlan& plan);

/// Producer-before-consumer order ignoring feedback edges, ties broken
/// lexicographically by id, with every loop body emitted contiguously right
/// after its loop head. Throws kInvalidPlan on plans that fail validation.
std::vector<std::string> topo_order(const RheemPlan& plan);
std::vector<int> topo_order_indices(const RheemPlan& plan);

/// JSON plan file <-> plan. Parse errors carry a line or field path.
RheemPlan parse_plan(std::string_view text);
std::string serialize_plan(const RheemPlan& plan);
RheemPlan load_plan(const std::string& path);

}  // namespace xflow

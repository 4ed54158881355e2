/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/costmodel.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "xflow/error.hpp"

namespace xflow {

using detail::Json;

SourceStats parse_source_stats(std::string_view text) {
  Json doc = detail::parse_json(text, "source stats");
  if (!doc.is_object()) detail::schema_error("stats", "expected an object keyed by source id");
  SourceStats out;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string path = "stats." + it.key();
    IntervalEstimate e;
    if (it->is_number()) {
      e = IntervalEstimate::exact(it->get<double>());
    } else if (it->is_object()) {
      e.low = detail::get_number(*it, "low", path);
      e.high = detail::opt_number(*it, "high", path).value_or(e.low);
      e.confidence = detail::opt_number(*it, "confidence", path).value_or(1.0);
    } else {
      detail::schema_error(path, "expected a number or {low, high, confidence}");
    }
    try {
      e.check();
    } catch (const Error& err) {
      detail::schema_error(path, err.what());
    }
    out[it.key()] = e;
  }
  return out;
}

SourceStats load_source_stats(const std::string& path) { return parse_source_stats(detail::read_file(path)); }

namespace {

IntervalEstimate sum(const std::vector<IntervalEstimate>& inputs) {
  if (inputs.empty()) return IntervalEstimate::exact(0.0);
  IntervalEstimate out = inputs.front();
  for (std::size_t i = 1; i < inputs.size(); ++i) out = out + inputs[i];
  return out;
}

IntervalEstimate apply_selectivity(const Operator& op, const IntervalEstimate& in, double fallback) {
  if (op.selectivity) return scale(in, *op.selectivity);
  IntervalEstimate out = scale(in, fallback);
  return with_confidence(out, kDefaultHintConfidence);
}

IntervalEstimate hinted_or_identity(const Operator& op, const IntervalEstimate& in) {
  return op.selectivity ? scale(in, *op.selectivity) : in;
}

}  // namespace

IntervalEstimate estimate_output(const Operator& op, const std::vector<IntervalEstimate>& inputs) {
  const std::string& k = op.kind;
  if (k == "Filter") return apply_selectivity(op, inputs.at(0), kDefaultFilterSelectivity);
  if (k == "FlatMap") return apply_selectivity(op, inputs.at(0), kDefaultFlatMapSelectivity);
  if (k == "Map") return inputs.at(0);
  if (k == "Reduce" || k == "Count") {
    double conf = inputs.empty() ? 1.0 : inputs[0].confidence;
    return {1.0, 1.0, conf};
  }
  if (k == "Union") return sum(inputs);
  if (k == "Cartesian") return inputs.at(0) * inputs.at(1);
  if (k == "Join" || k == "CoGroup") {
    const IntervalEstimate& a = inputs.at(0);
    const IntervalEstimate& b = inputs.at(1);
    // c1 * c2 / max(c1, c2) = min(c1, c2), evaluated per endpoint.
    IntervalEstimate base{std::min(a.low, b.low), std::min(a.high, b.high), std::min(a.confidence, b.confidence)};
    return apply_selectivity(op, base, kDefaultJoinSelectivity);
  }
  if (is_loop_kind(k)) return inputs.at(0);
  if (inputs.size() == 1) return hinted_or_identity(op, inputs[0]);
  return hinted_or_identity(op, sum(inputs));
}

void estimate_cardinalities(InflatedPlan& plan, const SourceStats& stats, const CardinalityOverrides& overrides) {
  const RheemPlan& rp = plan.plan;
  const std::size_t n = rp.size();
  plan.input_cardinality.assign(n, IntervalEstimate::exact(0.0));
  plan.output_cardinality.assign(n, {});
  for (int i : topo_order_indices(rp)) {
    const Operator& op = rp.op(i);
    std::vector<IntervalEstimate> inputs(op.inputs, IntervalEstimate::exact(0.0));
    std::vector<IntervalEstimate> forward;
    for (int e : rp.in_edges()[i]) {
      const Edge& edge = rp.edges()[e];
      if (edge.feedback) continue;
      int from = rp.index_of(edge.from);
      inputs[edge.to_slot] = plan.output_cardinality[from].at(edge.from_slot);
      forward.push_back(inputs[edge.to_slot]);
    }
    IntervalEstimate out;
    if (auto it = overrides.find(op.id); it != overrides.end()) {
      out = it->second;
    } else if (op.is_source()) {
      auto s = stats.find(op.id);
      if (s == stats.end()) {
        throw Error(ErrorCode::kMissingSourceStats, "MissingSourceStats(" + op.id + ")");
      }
      out = s->second;
    } else {
      out = estimate_output(op, inputs);
    }
    plan.input_cardinality[i] = op.is_source() ? out : sum(forward);
    plan.output_cardinality[i].assign(op.outputs, out);
  }
}

IntervalEstimate operator_cost(const CostFunction& fn, const IntervalEstimate& c_in, const PlatformProfile& profile) {
  return fn.evaluate(c_in, profile.unit_costs);
}

IntervalEstimate operator_cost(const ExecutionOperator& op, const PlatformCatalog& catalog,
                               const IntervalEstimate& c_in) {
  return catalog.cost_function(op.cost_ref).evaluate(c_in, catalog.unit_costs(op.platform));
}

void annotate_costs(InflatedPlan& plan, const PlatformCatalog& catalog, const ChannelConversionGraph& ccg) {
  if (plan.input_cardinality.size() != plan.ops.size()) {
    throw Error(ErrorCode::kInvalidArgument, "annotate_costs requires estimated cardinalities");
  }
  for (auto& iop : plan.ops) {
    const IntervalEstimate c_in = plan.input_cardinality[iop.index];
    const double mult = plan.multiplier.empty() ? 1.0 : plan.multiplier[iop.index];
    for (auto& alt : iop.alternatives) {
      IntervalEstimate total{0.0, 0.0, c_in.confidence};
      for (int oi : alt.op_indices) total = total + operator_cost(catalog.operators[oi], catalog, c_in);
      for (std::size_t j = 0; j + 1 < alt.op_indices.size(); ++j) {
        const auto& producer = catalog.operators[alt.op_indices[j]];
        const auto& consumer = catalog.operators[alt.op_indices[j + 1]];
        const int root = catalog.output_channel(producer, 0);
        TargetSet target = catalog.input_set(consumer, 0);
        if (std::find(target.begin(), target.end(), root) != target.end()) continue;
        try {
          total = total + find_mct(ccg, root, {target}, c_in).cost_interval;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kNoConversionTree) throw;
          alt.feasible = false;
        }
      }
      alt.cost = scale(total, mult);
      alt.scalar = alt.cost.midpoint();
    }
  }
  plan.costed = true;
}

double relative_loss(double t, double t_est, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "smoothing must be > 0");
  const double r = (std::abs(t - t_est) + s) / (t + s);
  return r * r;
}

}  // namespace xflow

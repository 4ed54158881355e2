/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/progressive.hpp"

#include <cmath>
#include <sstream>

#include "json_util.hpp"
#include "xflow/error.hpp"

namespace xflow {

using detail::Json;

std::vector<Checkpoint> insert_checkpoints(const ExecutionPlan& plan, const ChannelConversionGraph& ccg,
                                           const CheckpointThresholds& thresholds) {
  std::vector<Checkpoint> out;
  for (const auto& conv : plan.conversions) {
    const IntervalEstimate& c = conv.cardinality;
    const bool low_confidence = c.confidence < thresholds.min_confidence;
    const bool wide = c.width_ratio() > thresholds.max_width;
    if (!low_confidence && !wide) continue;
    std::string channel;
    int root = ccg.index_of(conv.root_channel);
    if (root >= 0 && ccg.reusable(root)) {
      channel = conv.root_channel;
    } else {
      for (const auto& id : conv.channels) {
        int idx = ccg.index_of(id);
        if (idx >= 0 && ccg.reusable(idx)) {
          channel = id;
          break;
        }
      }
    }
    if (channel.empty()) continue;
    std::string reason;
    if (low_confidence) reason = "confidence " + std::to_string(c.confidence);
    if (wide) reason += std::string(reason.empty() ? "" : ", ") + "width " + std::to_string(c.width_ratio());
    out.push_back({conv.producer, conv.slot, channel, reason});
  }
  return out;
}

bool cardinality_mismatch(const IntervalEstimate& estimate, double observed, double ratio) {
  if (!estimate.contains(observed)) return true;
  const double mid = estimate.midpoint();
  if (mid == 0.0 || observed == 0.0) return mid != observed;
  return observed / mid > ratio || mid / observed > ratio;
}

TruthModel parse_truth_model(std::string_view text) {
  Json doc = detail::parse_json(text, "truth model");
  if (!doc.is_object()) detail::schema_error("truth", "expected an object");
  TruthModel out;
  auto read = [&](const char* key, auto& target) {
    if (!doc.contains(key)) return;
    const Json& section = doc[key];
    const std::string path = std::string("truth.") + key;
    if (!section.is_object()) detail::schema_error(path, "expected an object keyed by operator id");
    for (auto it = section.begin(); it != section.end(); ++it) {
      if (!it->is_number() || it->get<double>() < 0) detail::schema_error(path + "." + it.key(), "expected a number >= 0");
      target[it.key()] = it->get<double>();
    }
  };
  read("sources", out.sources);
  read("selectivities", out.selectivities);
  return out;
}

TruthModel load_truth_model(const std::string& path) { return parse_truth_model(detail::read_file(path)); }

std::vector<double> true_cardinalities(const RheemPlan& plan, const SourceStats& stats, const TruthModel& truth) {
  std::vector<Operator> ops = plan.operators();
  SourceStats exact;
  for (auto& op : ops) {
    if (auto it = truth.selectivities.find(op.id); it != truth.selectivities.end()) op.selectivity = it->second;
    if (!op.is_source()) continue;
    if (auto it = truth.sources.find(op.id); it != truth.sources.end()) {
      exact[op.id] = IntervalEstimate::exact(it->second);
    } else if (auto s = stats.find(op.id); s != stats.end()) {
      exact[op.id] = IntervalEstimate::exact(s->second.midpoint());
    }
  }
  InflatedPlan shadow;
  shadow.plan = RheemPlan(std::move(ops), plan.edges());
  estimate_cardinalities(shadow, exact);
  std::vector<double> out;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& outs = shadow.output_cardinality[i];
    out.push_back(outs.empty() ? shadow.input_cardinality[i].midpoint() : outs.front().midpoint());
  }
  return out;
}

Reoptimization reoptimize(const RheemPlan& plan, const PlatformCatalog& catalog, const SourceStats& stats,
                          const ExecutionPlan& current, const std::vector<bool>& executed,
                          const CardinalityOverrides& observed, const OptimizeOptions& options) {
  OptimizeOptions opts = options;
  opts.overrides = observed;
  opts.context.executed = executed;
  if (opts.context.pinned.size() != plan.size()) opts.context.pinned.assign(plan.size(), -1);
  opts.context.started_platforms = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (!executed[i]) continue;
    opts.context.pinned[i] = current.choice.at(i);
    for (const auto& p : current.operators[i].platforms) {
      opts.context.started_platforms |= std::uint64_t{1} << catalog.platform_index(p);
    }
  }
  Optimization fresh = optimize(plan, catalog, stats, opts);

  ChannelConversionGraph ccg = ChannelConversionGraph::from_catalog(catalog);
  PlanSpace space(fresh.inflated, catalog, ccg, opts.context);
  Reoptimization out;
  auto before = space.full_cost(current.choice);
  out.remaining_after = fresh.plan.breakdown.total;
  out.remaining_before = before ? before->total : INFINITY;
  if (before && !(out.remaining_after < out.remaining_before)) {
    out.plan = space.build(current.choice);
    out.remaining_after = out.remaining_before;
  } else {
    out.plan = std::move(fresh.plan);
  }
  out.changed = out.plan.choice != current.choice;
  return out;
}

namespace {

const PlannedConversion* conversion_of(const ExecutionPlan& plan, const Checkpoint& cp) {
  for (const auto& c : plan.conversions) {
    if (c.producer == cp.producer && c.slot == cp.slot) return &c;
  }
  return nullptr;
}

}  // namespace

SimulationResult simulate(const RheemPlan& plan, const PlatformCatalog& catalog, const SourceStats& stats,
                          const TruthModel& truth, const ProgressiveOptions& options) {
  SimulationResult result;
  Optimization initial = optimize(plan, catalog, stats, options.optimize);
  ChannelConversionGraph ccg = ChannelConversionGraph::from_catalog(catalog);
  result.initial = initial.plan;
  ExecutionPlan current = initial.plan;
  std::vector<IntervalEstimate> estimate_out;
  auto refresh_estimates = [&](const InflatedPlan& inflated) {
    estimate_out.clear();
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& outs = inflated.output_cardinality[i];
      estimate_out.push_back(outs.empty() ? inflated.input_cardinality[i] : outs.front());
    }
  };
  refresh_estimates(initial.inflated);
  result.checkpoints = insert_checkpoints(current, ccg, options.thresholds);
  std::vector<Checkpoint> checkpoints = result.checkpoints;

  const std::vector<double> truth_out = true_cardinalities(plan, stats, truth);
  std::vector<bool> executed(plan.size(), false);
  CardinalityOverrides observed;
  const std::vector<int> order = topo_order_indices(plan);
  for (std::size_t step = 0; step < order.size(); ++step) {
    const int i = order[step];
    const Operator& op = plan.op(i);
    executed[i] = true;
    if (op.outputs > 0) observed[op.id] = IntervalEstimate::exact(truth_out[i]);
    TraceEvent ev;
    ev.type = TraceEvent::Type::kExecute;
    ev.op = op.id;
    ev.detail = current.operators[i].alternative;
    ev.estimated = estimate_out[i];
    ev.observed = truth_out[i];
    result.trace.push_back(ev);

    bool replan = false;
    for (const Checkpoint& cp : checkpoints) {
      if (cp.producer != op.id) continue;
      const PlannedConversion* conv = conversion_of(current, cp);
      TraceEvent chk;
      chk.type = TraceEvent::Type::kCheckpoint;
      chk.op = op.id;
      chk.detail = cp.channel + " (" + cp.reason + ")";
      chk.estimated = conv ? conv->cardinality : estimate_out[i];
      chk.observed = truth_out[i];
      chk.fired = cardinality_mismatch(chk.estimated, chk.observed, options.thresholds.mismatch_ratio);
      replan = replan || chk.fired;
      result.trace.push_back(chk);
    }
    if (!replan || !options.reoptimize || step + 1 == order.size()) continue;

    Reoptimization r = reoptimize(plan, catalog, stats, current, executed, observed, options.optimize);
    TraceEvent re;
    re.type = TraceEvent::Type::kReoptimize;
    re.op = op.id;
    std::ostringstream os;
    os.precision(12);
    os << "remaining " << r.remaining_before << " -> " << r.remaining_after << (r.changed ? " (plan changed)" : " (plan kept)");
    re.detail = os.str();
    result.trace.push_back(re);
    current = r.plan;
    result.reoptimizations.push_back(std::move(r));
    // Estimates of the remaining operators now start from the observations.
    InflatedPlan inflated = inflate(plan, catalog);
    estimate_cardinalities(inflated, stats, observed);
    refresh_estimates(inflated);
    checkpoints = insert_checkpoints(current, ccg, options.thresholds);
  }
  result.final_plan = current;
  return result;
}

std::string format_trace(const SimulationResult& result) {
  std::ostringstream os;
  os.precision(12);
  os << "checkpoints:";
  if (result.checkpoints.empty()) os << " none";
  os << "\n";
  for (const auto& cp : result.checkpoints) {
    os << "  " << cp.producer << ":" << cp.slot << " on " << cp.channel << " (" << cp.reason << ")\n";
  }
  os << "trace:\n";
  for (const auto& ev : result.trace) {
    switch (ev.type) {
      case TraceEvent::Type::kExecute:
        os << "  execute " << ev.op << " as " << ev.detail << ": estimated " << to_string(ev.estimated)
           << ", observed " << ev.observed << "\n";
        break;
      case TraceEvent::Type::kCheckpoint:
        os << "  checkpoint " << ev.op << " " << ev.detail << ": estimated " << to_string(ev.estimated)
           << ", observed " << ev.observed << (ev.fired ? ", mismatch" : ", ok") << "\n";
        break;
      case TraceEvent::Type::kReoptimize:
        os << "  reoptimize after " << ev.op << ": " << ev.detail << "\n";
        break;
    }
  }
  auto plan_line = [&](const char* title, const ExecutionPlan& p) {
    os << title << ":";
    for (const auto& op : p.operators) os << " " << op.id << "=" << op.alternative;
    os << "\n";
  };
  plan_line("initial plan", result.initial);
  plan_line("final plan", result.final_plan);
  return os.str();
}

}  // namespace xflow

/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/enumeration.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "xflow/error.hpp"

namespace xflow {

std::string PruneRule::to_string() const {
  switch (kind) {
    case Kind::kLossless: return "lossless";
    case Kind::kTopK: return "topk:" + std::to_string(k);
    case Kind::kNone: return "none";
  }
  return "?";
}

PruneRule parse_prune_rule(const std::string& text) {
  if (text == "lossless") return PruneRule::lossless();
  if (text == "none") return PruneRule::none();
  if (text.rfind("topk:", 0) == 0) {
    try {
      std::size_t used = 0;
      int k = std::stoi(text.substr(5), &used);
      if (used == text.size() - 5 && k >= 1) return PruneRule::top_k(k);
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown prune rule '" + text + "' (lossless, topk:K, none)");
}

namespace {

using Clock = std::chrono::steady_clock;

struct Slot {
  int producer = 0;
  int out_slot = 0;
  std::vector<std::pair<int, int>> consumers;  // (operator, input slot)
  std::vector<int> endpoints;                  // sorted, unique
  double multiplier = 1.0;
  IntervalEstimate cardinality;
  bool free = false;
};

struct MctValue {
  bool feasible = false;
  IntervalEstimate cost;
  double scalar = 0.0;
};

struct VecHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<std::uint32_t>(x);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

struct PlanSpace::Impl {
  InflatedPlan plan;
  const PlatformCatalog& catalog;
  const ChannelConversionGraph& ccg;
  CostContext context;
  int n = 0;

  std::vector<std::vector<std::uint16_t>> feasible;
  std::vector<Slot> slots;
  std::vector<std::vector<int>> op_slots;  // slots each operator takes part in
  std::vector<TargetSet> pool;
  std::map<TargetSet, int> pool_index;
  std::vector<bool> mergeable;
  std::vector<std::vector<std::vector<int>>> target_id;  // [op][alt][input slot]
  std::vector<double> startup;
  std::vector<int> id_rank;                              // operator index -> rank by id

  mutable std::vector<std::vector<IntervalEstimate>> edge_costs;  // per slot, lazily priced
  mutable std::unordered_map<std::vector<int>, MctValue, VecHash> memo;
  mutable std::size_t mct_queries = 0;
  mutable double mct_seconds = 0.0;

  Impl(const InflatedPlan& p, const PlatformCatalog& cat, const ChannelConversionGraph& g, CostContext ctx)
      : plan(p), catalog(cat), ccg(g), context(std::move(ctx)) {
    const RheemPlan& rp = plan.plan;
    n = static_cast<int>(rp.size());
    if (!plan.costed) throw Error(ErrorCode::kInvalidArgument, "enumeration requires a cost-annotated plan");
    if (context.executed.empty()) context.executed.assign(n, false);
    if (context.executed.size() != static_cast<std::size_t>(n)) throw Error(ErrorCode::kInvalidArgument, "executed mask size mismatch");
    feasible.resize(n);
    for (int i = 0; i < n; ++i) {
      const auto& alts = plan.ops[i].alternatives;
      if (alts.size() >= kNoChoice) throw Error(ErrorCode::kInstanceTooLarge, "too many alternatives");
      const int pin = i < static_cast<int>(context.pinned.size()) ? context.pinned[i] : -1;
      if (pin >= static_cast<int>(alts.size())) throw Error(ErrorCode::kInvalidArgument, "pinned alternative out of range");
      for (std::size_t a = 0; a < alts.size(); ++a) {
        if (pin >= 0 ? static_cast<int>(a) == pin : alts[a].feasible) feasible[i].push_back(static_cast<std::uint16_t>(a));
      }
    }

    std::map<std::pair<int, int>, int> slot_of;
    for (const Edge& e : rp.edges()) slot_of.try_emplace({rp.index_of(e.from), e.from_slot}, 0);
    slots.resize(slot_of.size());
    int idx = 0;
    for (auto& [key, s] : slot_of) {
      s = idx++;
      slots[s].producer = key.first;
      slots[s].out_slot = key.second;
    }
    for (const Edge& e : rp.edges()) {
      int from = rp.index_of(e.from), to = rp.index_of(e.to);
      slots[slot_of[{from, e.from_slot}]].consumers.emplace_back(to, e.to_slot);
    }
    op_slots.resize(n);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      Slot& slot = slots[s];
      std::sort(slot.consumers.begin(), slot.consumers.end());
      slot.endpoints.push_back(slot.producer);
      for (auto [c, t] : slot.consumers) slot.endpoints.push_back(c);
      std::sort(slot.endpoints.begin(), slot.endpoints.end());
      slot.endpoints.erase(std::unique(slot.endpoints.begin(), slot.endpoints.end()), slot.endpoints.end());
      slot.free = true;
      for (int op : slot.endpoints) {
        slot.multiplier = std::max(slot.multiplier, plan.multiplier.empty() ? 1.0 : plan.multiplier[op]);
        op_slots[op].push_back(static_cast<int>(s));
        if (!context.executed[op]) slot.free = false;
      }
      slot.cardinality = plan.output_cardinality.at(slot.producer).at(slot.out_slot);
    }
    edge_costs.resize(slots.size());

    target_id.resize(n);
    for (int i = 0; i < n; ++i) {
      for (const auto& alt : plan.ops[i].alternatives) {
        std::vector<int> ids;
        for (const auto& set : alt.input_sets) ids.push_back(intern(set));
        target_id[i].push_back(std::move(ids));
      }
    }
    for (const auto& p : catalog.platforms) startup.push_back(p.startup);

    std::vector<int> by_id(n);
    std::iota(by_id.begin(), by_id.end(), 0);
    std::sort(by_id.begin(), by_id.end(), [&](int a, int b) { return rp.op(a).id < rp.op(b).id; });
    id_rank.resize(n);
    for (int r = 0; r < n; ++r) id_rank[by_id[r]] = r;
  }

  int intern(const TargetSet& raw) {
    TargetSet set = raw;
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    auto [it, fresh] = pool_index.try_emplace(set, static_cast<int>(pool.size()));
    if (fresh) {
      int reusable = 0, non_reusable = 0;
      for (int c : set) (ccg.reusable(c) ? reusable : non_reusable)++;
      pool.push_back(set);
      mergeable.push_back(reusable >= 1 && non_reusable <= 1);
    }
    return it->second;
  }

  const Alternative& alt(int op, std::uint16_t a) const { return plan.ops[op].alternatives[a]; }
  double op_scalar(int op, std::uint16_t a) const { return context.executed[op] ? 0.0 : alt(op, a).scalar; }
  IntervalEstimate op_interval(int op, std::uint16_t a) const {
    return context.executed[op] ? IntervalEstimate::exact(0.0) : alt(op, a).cost;
  }

  // Data-movement signature of a slot given the choices of the endpoints that
  // are set: producer channel (or -1) and the multiset of consumer target
  // sets, with repetitions of mergeable sets capped at two. Equal signatures
  // mean equal conversion trees costs once the slot is complete.
  void signature(int s, const std::vector<std::uint16_t>& choice, std::vector<int>& out) const {
    const Slot& slot = slots[s];
    const std::uint16_t pc = choice[slot.producer];
    out.push_back(pc == kNoChoice ? -1 : alt(slot.producer, pc).output_channels.at(slot.out_slot));
    const std::size_t count_at = out.size();
    out.push_back(0);
    thread_local std::vector<int> ids;
    ids.clear();
    for (auto [c, t] : slot.consumers) {
      if (choice[c] != kNoChoice) ids.push_back(target_id[c][choice[c]].at(t));
    }
    std::sort(ids.begin(), ids.end());
    int pairs = 0;
    for (std::size_t i = 0; i < ids.size();) {
      std::size_t j = i;
      while (j < ids.size() && ids[j] == ids[i]) ++j;
      int count = static_cast<int>(j - i);
      if (mergeable[ids[i]]) count = std::min(count, 2);
      out.push_back(ids[i]);
      out.push_back(count);
      ++pairs;
      i = j;
    }
    out[count_at] = pairs;
  }

  const MctValue& mct(int s, const std::vector<std::uint16_t>& choice) const {
    thread_local std::vector<int> key;
    key.clear();
    key.push_back(s);
    signature(s, choice, key);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;

    auto start = Clock::now();
    ++mct_queries;
    MctValue value;
    std::vector<TargetSet> targets;
    const int pairs = key[2];
    for (int p = 0; p < pairs; ++p) {
      for (int c = 0; c < key[4 + 2 * p]; ++c) targets.push_back(pool[key[3 + 2 * p]]);
    }
    if (edge_costs[s].empty() && !ccg.edges().empty()) edge_costs[s] = ccg.price(slots[s].cardinality);
    try {
      ConversionTree tree = find_mct(ccg, key[1], targets, edge_costs[s]);
      value.feasible = true;
      value.cost = tree.cost_interval;
      value.scalar = tree.cost;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoConversionTree) throw;
    }
    mct_seconds += std::chrono::duration<double>(Clock::now() - start).count();
    return memo.emplace(std::move(key), value).first->second;
  }

  // Cost of a complete slot, nullptr if no conversion tree exists.
  bool slot_cost(int s, const std::vector<std::uint16_t>& choice, double& scalar, IntervalEstimate* interval) const {
    const Slot& slot = slots[s];
    if (slot.free) {
      scalar = 0.0;
      if (interval) *interval = IntervalEstimate::exact(0.0);
      return true;
    }
    const MctValue& v = mct(s, choice);
    if (!v.feasible) return false;
    scalar = v.scalar * slot.multiplier;
    if (interval) *interval = scale(v.cost, slot.multiplier);
    return true;
  }

  double startup_of(std::uint64_t platforms) const {
    double total = 0.0;
    for (std::size_t p = 0; p < startup.size(); ++p) {
      if ((platforms >> p & 1) && !(context.started_platforms >> p & 1)) total += startup[p];
    }
    return total;
  }

  // Lexicographic comparison of two complete assignments by operator id.
  bool canonical_less(const std::vector<std::uint16_t>& a, const std::vector<std::uint16_t>& b) const {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[id_rank[i]] = i;
    for (int i : order) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }
};

PlanSpace::PlanSpace(const InflatedPlan& plan, const PlatformCatalog& catalog, const ChannelConversionGraph& ccg,
                     CostContext context)
    : impl_(std::make_unique<Impl>(plan, catalog, ccg, std::move(context))) {}

PlanSpace::~PlanSpace() = default;

const InflatedPlan& PlanSpace::plan() const { return impl_->plan; }
std::size_t PlanSpace::size() const { return impl_->plan.plan.size(); }
const std::vector<std::uint16_t>& PlanSpace::feasible(int op) const { return impl_->feasible.at(op); }

std::optional<CostBreakdown> PlanSpace::full_cost(const std::vector<std::uint16_t>& choice) const {
  const Impl& m = *impl_;
  CostBreakdown b;
  std::uint64_t platforms = 0;
  for (int i = 0; i < m.n; ++i) {
    b.operators += m.op_scalar(i, choice[i]);
    platforms |= m.alt(i, choice[i]).platforms;
  }
  for (std::size_t s = 0; s < m.slots.size(); ++s) {
    double c = 0.0;
    if (!m.slot_cost(static_cast<int>(s), choice, c, nullptr)) return std::nullopt;
    b.movement += c;
  }
  b.startup = m.startup_of(platforms);
  b.total = b.operators + b.movement + b.startup;
  return b;
}

std::optional<IntervalEstimate> PlanSpace::full_interval(const std::vector<std::uint16_t>& choice) const {
  const Impl& m = *impl_;
  IntervalEstimate total = IntervalEstimate::exact(0.0);
  std::uint64_t platforms = 0;
  for (int i = 0; i < m.n; ++i) {
    total = total + m.op_interval(i, choice[i]);
    platforms |= m.alt(i, choice[i]).platforms;
  }
  for (std::size_t s = 0; s < m.slots.size(); ++s) {
    double c = 0.0;
    IntervalEstimate iv;
    if (!m.slot_cost(static_cast<int>(s), choice, c, &iv)) return std::nullopt;
    total = total + iv;
  }
  return total + IntervalEstimate::exact(m.startup_of(platforms));
}

ExecutionPlan PlanSpace::build(const std::vector<std::uint16_t>& choice) const {
  const Impl& m = *impl_;
  auto breakdown = full_cost(choice);
  auto interval = full_interval(choice);
  if (!breakdown || !interval) throw Error(ErrorCode::kNoExecutableFullPlan, "assignment is not executable");
  ExecutionPlan out;
  out.choice = choice;
  out.breakdown = *breakdown;
  out.cost = *interval;
  const RheemPlan& rp = m.plan.plan;
  std::uint64_t platforms = 0;
  for (int i = 0; i < m.n; ++i) {
    const Alternative& a = m.alt(i, choice[i]);
    PlannedOperator po;
    po.id = rp.op(i).id;
    po.kind = rp.op(i).kind;
    po.alternative = a.label();
    po.exec_ops = a.ops;
    po.via = a.via;
    for (std::size_t p = 0; p < m.catalog.platforms.size(); ++p) {
      if (a.platforms >> p & 1) po.platforms.push_back(m.catalog.platforms[p].id);
    }
    po.input_cardinality = m.plan.input_cardinality[i];
    po.cost = m.op_interval(i, choice[i]);
    po.scalar = m.op_scalar(i, choice[i]);
    platforms |= a.platforms;
    out.operators.push_back(std::move(po));
  }
  for (std::size_t p = 0; p < m.catalog.platforms.size(); ++p) {
    if (platforms >> p & 1) out.platforms.push_back(m.catalog.platforms[p].id);
  }
  for (std::size_t s = 0; s < m.slots.size(); ++s) {
    const Slot& slot = m.slots[s];
    PlannedConversion pc;
    pc.producer = rp.op(slot.producer).id;
    pc.slot = slot.out_slot;
    const int root = m.alt(slot.producer, choice[slot.producer]).output_channels.at(slot.out_slot);
    pc.root_channel = m.ccg.channels()[root].id;
    pc.cardinality = slot.cardinality;
    std::vector<TargetSet> targets;
    for (auto [c, t] : slot.consumers) targets.push_back(m.alt(c, choice[c]).input_sets.at(t));
    if (m.edge_costs[s].empty() && !m.ccg.edges().empty()) m.edge_costs[s] = m.ccg.price(slot.cardinality);
    ConversionTree tree = find_mct(m.ccg, root, targets, m.edge_costs[s]);
    for (int e : tree.edges) {
      const CcgEdge& edge = m.ccg.edges()[e];
      pc.edges.push_back(m.ccg.channels()[edge.from].id + "->" + m.ccg.channels()[edge.to].id + "#" + edge.op);
    }
    std::sort(pc.edges.begin(), pc.edges.end());
    for (int c : tree.channels(m.ccg)) pc.channels.push_back(m.ccg.channels()[c].id);
    std::sort(pc.channels.begin(), pc.channels.end());
    for (std::size_t k = 0; k < slot.consumers.size(); ++k) {
      auto [c, t] = slot.consumers[k];
      pc.consumers.emplace_back(rp.op(c).id + ":" + std::to_string(t), m.ccg.channels()[tree.target_channel[k]].id);
    }
    IntervalEstimate iv;
    m.slot_cost(static_cast<int>(s), choice, pc.scalar, &iv);
    pc.cost = iv;
    out.conversions.push_back(std::move(pc));
  }
  out.stats.mct_queries = m.mct_queries;
  out.stats.mct_seconds = m.mct_seconds;
  return out;
}

namespace {

// Slots with every endpoint inside `in` but not entirely inside `a` or `b`.
std::vector<int> newly_complete(const PlanSpace::Impl& m, const std::vector<char>& in, const std::vector<char>& a,
                                const std::vector<char>& b) {
  std::vector<int> out;
  for (std::size_t s = 0; s < m.slots.size(); ++s) {
    bool all_in = true, all_a = true, all_b = true;
    for (int op : m.slots[s].endpoints) {
      all_in = all_in && in[op];
      all_a = all_a && a[op];
      all_b = all_b && b[op];
    }
    if (all_in && !all_a && !all_b) out.push_back(static_cast<int>(s));
  }
  return out;
}

std::vector<char> membership(int n, const std::vector<int>& scope) {
  std::vector<char> in(n, 0);
  for (int op : scope) in[op] = 1;
  return in;
}

// Slots with endpoints on both sides of the scope.
std::vector<int> partial_slots(const PlanSpace::Impl& m, const std::vector<char>& in) {
  std::vector<int> out;
  for (std::size_t s = 0; s < m.slots.size(); ++s) {
    bool any = false, all = true;
    for (int op : m.slots[s].endpoints) {
      any = any || in[op];
      all = all && in[op];
    }
    if (any && !all) out.push_back(static_cast<int>(s));
  }
  return out;
}

std::string scope_id(const PlanSpace::Impl& m, const std::vector<int>& scope) {
  std::vector<std::string> ids;
  for (int op : scope) ids.push_back(m.plan.plan.op(op).id);
  std::sort(ids.begin(), ids.end());
  std::string out;
  for (const auto& id : ids) out += id + ",";
  return out;
}

bool cheaper(const PlanSpace::Impl& m, const Subplan& a, const Subplan& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return m.canonical_less(a.choice, b.choice);
}

}  // namespace

std::vector<int> boundary_operators(const PlanSpace& space, const std::vector<int>& scope) {
  const auto& m = space.impl();
  const auto in = membership(m.n, scope);
  std::vector<char> boundary(m.n, 0);
  for (int s : partial_slots(m, in)) {
    for (int op : m.slots[s].endpoints) {
      if (in[op]) boundary[op] = 1;
    }
  }
  std::vector<int> out;
  for (int op : scope) {
    if (boundary[op]) out.push_back(op);
  }
  return out;
}

Enumeration singleton(const PlanSpace& space, int op) {
  const auto& m = space.impl();
  if (op < 0 || op >= m.n) throw Error(ErrorCode::kInvalidArgument, "operator index out of range");
  Enumeration e;
  e.scope = {op};
  const auto in = membership(m.n, e.scope);
  std::vector<char> none(m.n, 0);
  std::vector<int> complete = newly_complete(m, in, none, none);
  if (m.feasible[op].empty()) {
    throw Error(ErrorCode::kNoExecutableFullPlan, "operator '" + m.plan.plan.op(op).id + "' has no executable alternative");
  }
  for (std::uint16_t a : m.feasible[op]) {
    const Alternative& alt = m.alt(op, a);
    Subplan sp;
    sp.choice.assign(m.n, kNoChoice);
    sp.choice[op] = a;
    const IntervalEstimate cost = m.op_interval(op, a);
    sp.cost = m.op_scalar(op, a);
    sp.low = cost.low;
    sp.high = cost.high;
    sp.confidence = cost.confidence;
    sp.platforms = alt.platforms;
    bool ok = true;
    for (int s : complete) {
      double c;
      IntervalEstimate iv;
      if (!m.slot_cost(s, sp.choice, c, &iv)) {
        ok = false;
        break;
      }
      sp.cost += c;
      sp.low += iv.low;
      sp.high += iv.high;
    }
    if (ok) e.subplans.push_back(std::move(sp));
  }
  return e;
}

namespace {

Enumeration join_impl(const PlanSpace& space, const Enumeration& a, const Enumeration& b, std::size_t limit) {
  const auto& m = space.impl();
  auto in_a = membership(m.n, a.scope);
  auto in_b = membership(m.n, b.scope);
  for (int op : b.scope) {
    if (in_a[op]) {
      throw Error(ErrorCode::kOverlappingScopes, "OverlappingScopes: operator '" + m.plan.plan.op(op).id +
                                                     "' is in both enumerations");
    }
  }
  Enumeration out;
  out.scope = a.scope;
  out.scope.insert(out.scope.end(), b.scope.begin(), b.scope.end());
  std::sort(out.scope.begin(), out.scope.end());
  auto in = membership(m.n, out.scope);
  const std::vector<int> complete = newly_complete(m, in, in_a, in_b);
  if (a.subplans.size() * b.subplans.size() > limit * 4 && complete.empty()) {
    throw Error(ErrorCode::kInstanceTooLarge, "enumeration exceeds " + std::to_string(limit) + " subplans");
  }
  for (const Subplan& x : a.subplans) {
    for (const Subplan& y : b.subplans) {
      Subplan sp = x;
      for (int op : b.scope) sp.choice[op] = y.choice[op];
      sp.cost += y.cost;
      sp.low += y.low;
      sp.high += y.high;
      sp.confidence = std::min(sp.confidence, y.confidence);
      sp.platforms |= y.platforms;
      bool ok = true;
      for (int s : complete) {
        double c;
        IntervalEstimate iv;
        if (!m.slot_cost(s, sp.choice, c, &iv)) {
          ok = false;
          break;
        }
        sp.cost += c;
        sp.low += iv.low;
        sp.high += iv.high;
      }
      if (!ok) continue;
      out.subplans.push_back(std::move(sp));
      if (out.subplans.size() > limit) {
        throw Error(ErrorCode::kInstanceTooLarge, "enumeration exceeds " + std::to_string(limit) + " subplans");
      }
    }
  }
  return out;
}

}  // namespace

Enumeration join(const PlanSpace& space, const Enumeration& a, const Enumeration& b) {
  return join_impl(space, a, b, static_cast<std::size_t>(-1) / 8);
}

Enumeration prune(const PlanSpace& space, const Enumeration& e, const PruneRule& rule, const PruneObserver& observer) {
  const auto& m = space.impl();
  if (rule.kind == PruneRule::Kind::kNone) return e;
  Enumeration out;
  out.scope = e.scope;
  if (rule.kind == PruneRule::Kind::kTopK) {
    std::vector<std::size_t> order(e.subplans.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return cheaper(m, e.subplans[x], e.subplans[y]); });
    std::vector<char> keep(e.subplans.size(), 0);
    for (std::size_t i = 0; i < order.size() && static_cast<int>(i) < rule.k; ++i) keep[order[i]] = 1;
    for (std::size_t i = 0; i < e.subplans.size(); ++i) {
      if (keep[i]) {
        out.subplans.push_back(e.subplans[i]);
      } else if (observer) {
        observer(e.scope, e.subplans[i]);
      }
    }
    return out;
  }

  // Lossless: one class per (data-movement signature of every slot leaving
  // the scope, platform set); keep every subplan of minimum cost.
  const auto in = membership(m.n, e.scope);
  const std::vector<int> partial = partial_slots(m, in);
  std::unordered_map<std::vector<int>, std::vector<std::size_t>, VecHash> classes;
  std::vector<std::vector<int>> keys(e.subplans.size());
  std::vector<std::vector<int>> key_order;
  for (std::size_t i = 0; i < e.subplans.size(); ++i) {
    const Subplan& sp = e.subplans[i];
    std::vector<int>& key = keys[i];
    for (int s : partial) m.signature(s, sp.choice, key);
    key.push_back(static_cast<int>(sp.platforms & 0xffffffffu));
    key.push_back(static_cast<int>(sp.platforms >> 32));
    auto [it, fresh] = classes.try_emplace(key);
    auto& members = it->second;
    if (fresh) key_order.push_back(key);
    if (members.empty() || sp.cost < e.subplans[members.front()].cost) {
      members.assign(1, i);
    } else if (sp.cost == e.subplans[members.front()].cost) {
      members.push_back(i);
    }
  }
  std::vector<char> keep(e.subplans.size(), 0);
  for (auto& [key, members] : classes) {
    for (std::size_t i : members) keep[i] = 1;
  }
  for (std::size_t i = 0; i < e.subplans.size(); ++i) {
    if (keep[i]) {
      out.subplans.push_back(e.subplans[i]);
    } else if (observer) {
      observer(e.scope, e.subplans[i]);
    }
  }
  return out;
}

ExecutionPlan enumerate(const PlanSpace& space, const EnumerateOptions& options) {
  const auto& m = space.impl();
  const int n = m.n;
  if (n == 0) throw Error(ErrorCode::kNoExecutableFullPlan, "empty plan");
  EnumerationStats stats;
  const std::size_t queries_before = m.mct_queries;
  const double mct_before = m.mct_seconds;

  auto apply_rule = [&](Enumeration e) {
    std::size_t before = e.subplans.size();
    stats.subplans_created += before;
    Enumeration pruned = prune(space, e, options.rule, options.observer);
    stats.subplans_pruned += before - pruned.subplans.size();
    stats.max_enumeration = std::max(stats.max_enumeration, before);
    if (pruned.subplans.empty()) {
      throw Error(ErrorCode::kNoExecutableFullPlan,
                  "NoExecutableFullPlan: no connectable subplan for scope {" + scope_id(m, e.scope) + "}");
    }
    return pruned;
  };

  std::vector<Enumeration> enums;
  std::vector<int> owner(n);
  std::vector<char> alive;
  for (int i = 0; i < n; ++i) {
    enums.push_back(apply_rule(singleton(space, i)));
    owner[i] = i;
    alive.push_back(1);
  }

  // Folds the member enumerations into one; Lossless pruning is applied after
  // every step, the other rules once on the product.
  auto fold = [&](std::vector<int> members) {
    Enumeration acc = enums[members.front()];
    for (std::size_t j = 1; j < members.size(); ++j) {
      acc = join_impl(space, acc, enums[members[j]], options.max_subplans);
      if (options.rule.kind == PruneRule::Kind::kLossless || j + 1 == members.size()) {
        acc = apply_rule(std::move(acc));
      } else {
        stats.subplans_created += acc.subplans.size();
      }
    }
    for (int e : members) alive[e] = 0;
    int id = static_cast<int>(enums.size());
    for (int op : acc.scope) owner[op] = id;
    enums.push_back(std::move(acc));
    alive.push_back(1);
    ++stats.join_groups;
  };

  auto members_of = [&](const Slot& slot) {
    std::vector<int> members{owner[slot.producer]};
    std::vector<std::pair<int, int>> rest;
    for (int op : slot.endpoints) {
      int e = owner[op];
      if (e == members.front()) continue;
      int first = enums[e].scope.front();
      rest.emplace_back(first, e);
    }
    std::sort(rest.begin(), rest.end());
    rest.erase(std::unique(rest.begin(), rest.end()), rest.end());
    for (auto [first, e] : rest) members.push_back(e);
    return members;
  };

  std::mt19937_64 rng(options.shuffle_seed.value_or(0));
  while (true) {
    std::vector<int> pending;
    for (std::size_t s = 0; s < m.slots.size(); ++s) {
      if (members_of(m.slots[s]).size() > 1) pending.push_back(static_cast<int>(s));
    }
    if (pending.empty()) break;
    int chosen = -1;
    if (options.shuffle_seed) {
      chosen = pending[std::uniform_int_distribution<std::size_t>(0, pending.size() - 1)(rng)];
    } else {
      std::tuple<std::size_t, std::size_t, std::string> best;
      for (int s : pending) {
        std::vector<int> scope;
        for (int e : members_of(m.slots[s])) scope.insert(scope.end(), enums[e].scope.begin(), enums[e].scope.end());
        std::sort(scope.begin(), scope.end());
        auto key = std::make_tuple(boundary_operators(space, scope).size(), scope.size(), scope_id(m, scope));
        if (chosen < 0 || key < best) {
          best = std::move(key);
          chosen = s;
        }
      }
    }
    fold(members_of(m.slots[chosen]));
  }

  std::vector<std::pair<int, int>> components;
  for (std::size_t e = 0; e < enums.size(); ++e) {
    if (alive[e]) components.emplace_back(enums[e].scope.front(), static_cast<int>(e));
  }
  std::sort(components.begin(), components.end());
  if (components.size() > 1) {
    std::vector<int> members;
    for (auto [first, e] : components) members.push_back(e);
    fold(members);
  }
  const Enumeration& final_enum = enums[owner[0]];

  const std::vector<std::uint16_t>* best = nullptr;
  double best_total = 0.0;
  for (const Subplan& sp : final_enum.subplans) {
    auto cost = space.full_cost(sp.choice);
    if (!cost) continue;
    if (!best || cost->total < best_total || (cost->total == best_total && m.canonical_less(sp.choice, *best))) {
      best = &sp.choice;
      best_total = cost->total;
    }
  }
  if (!best) throw Error(ErrorCode::kNoExecutableFullPlan, "NoExecutableFullPlan: no complete plan is executable");
  ExecutionPlan plan = space.build(*best);
  stats.mct_queries = m.mct_queries - queries_before;
  stats.mct_seconds = m.mct_seconds - mct_before;
  plan.stats = stats;
  return plan;
}

ExhaustiveResult exhaustive_enumerate(const PlanSpace& space, bool collect_optima) {
  const auto& m = space.impl();
  const int n = m.n;
  double denoted = 1.0;
  for (int i = 0; i < n; ++i) denoted *= static_cast<double>(m.feasible[i].size());
  if (denoted > kExhaustiveLimit) {
    throw Error(ErrorCode::kInstanceTooLarge, "exhaustive enumeration limited to 1e6 plans, instance denotes " +
                                                  std::to_string(denoted));
  }
  ExhaustiveResult result;
  if (n == 0 || denoted == 0.0) throw Error(ErrorCode::kNoExecutableFullPlan, "NoExecutableFullPlan: empty search space");
  std::vector<std::size_t> digit(n, 0);
  std::vector<std::uint16_t> choice(n);
  for (int i = 0; i < n; ++i) choice[i] = m.feasible[i][0];
  std::vector<std::uint16_t> best;
  double best_total = 0.0;
  while (true) {
    ++result.evaluated;
    if (auto cost = space.full_cost(choice)) {
      if (best.empty() || cost->total < best_total) {
        best = choice;
        best_total = cost->total;
        result.optima.clear();
        if (collect_optima) result.optima.push_back(choice);
      } else if (cost->total == best_total) {
        if (m.canonical_less(choice, best)) best = choice;
        if (collect_optima) result.optima.push_back(choice);
      }
    }
    int i = 0;
    for (; i < n; ++i) {
      if (++digit[i] < m.feasible[i].size()) {
        choice[i] = m.feasible[i][digit[i]];
        break;
      }
      digit[i] = 0;
      choice[i] = m.feasible[i][0];
    }
    if (i == n) break;
  }
  if (best.empty()) throw Error(ErrorCode::kNoExecutableFullPlan, "NoExecutableFullPlan: no complete plan is executable");
  result.plan = space.build(best);
  return result;
}

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

Optimization optimize_inflated(InflatedPlan inflated, const PlatformCatalog& catalog, const SourceStats& stats,
                               const OptimizeOptions& options) {
  Optimization out;
  auto start = Clock::now();
  estimate_cardinalities(inflated, stats, options.overrides);
  out.timings.cardinality_ms = ms_since(start);

  start = Clock::now();
  ChannelConversionGraph ccg = ChannelConversionGraph::from_catalog(catalog);
  annotate_costs(inflated, catalog, ccg);
  out.timings.cardinality_ms += ms_since(start);

  start = Clock::now();
  PlanSpace space(inflated, catalog, ccg, options.context);
  out.plan = options.exhaustive ? exhaustive_enumerate(space).plan : enumerate(space, options.enumerate);
  const double enumerate_ms = ms_since(start);
  const double mct_ms = space.impl().mct_seconds * 1000.0;
  out.timings.mct_ms = mct_ms;
  out.timings.enumeration_ms = std::max(0.0, enumerate_ms - mct_ms);
  out.inflated = std::move(inflated);
  return out;
}

Optimization optimize(const RheemPlan& plan, const PlatformCatalog& catalog, const SourceStats& stats,
                      const OptimizeOptions& options) {
  auto start = Clock::now();
  InflatedPlan inflated = inflate(plan, catalog);
  const double inflation_ms = ms_since(start);
  Optimization out = optimize_inflated(std::move(inflated), catalog, stats, options);
  out.timings.inflation_ms = inflation_ms;
  return out;
}

}  // namespace xflow

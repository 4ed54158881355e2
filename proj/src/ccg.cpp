/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/ccg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "xflow/catalog.hpp"
#include "xflow/error.hpp"

namespace xflow {

ChannelConversionGraph::ChannelConversionGraph(std::vector<CcgChannel> channels, std::vector<CcgEdge> edges)
    : channels_(std::move(channels)), edges_(std::move(edges)), out_(channels_.size()) {
  if (channels_.size() > 64) throw Error(ErrorCode::kInvalidArgument, "channel conversion graph limited to 64 channels");
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const CcgEdge& edge = edges_[e];
    const int n = static_cast<int>(channels_.size());
    if (edge.from < 0 || edge.to < 0 || edge.from >= n || edge.to >= n) {
      throw Error(ErrorCode::kInvalidArgument, "conversion edge references an unknown channel");
    }
    if (edge.from == edge.to) throw Error(ErrorCode::kInvalidArgument, "conversion edge is a self-loop");
    out_[edge.from].push_back(static_cast<int>(e));
  }
}

ChannelConversionGraph ChannelConversionGraph::from_catalog(const PlatformCatalog& catalog) {
  std::vector<CcgChannel> channels;
  for (const auto& c : catalog.channels) channels.push_back({c.id, c.reusable});
  std::vector<CcgEdge> edges;
  for (const auto& conv : catalog.conversions) {
    edges.push_back({catalog.channel_index(conv.from), catalog.channel_index(conv.to), conv.id,
                     catalog.cost_function(conv.cost_ref), catalog.unit_costs(conv.platform)});
  }
  return ChannelConversionGraph(std::move(channels), std::move(edges));
}

int ChannelConversionGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < channels_.size(); ++i) {
    if (channels_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<IntervalEstimate> ChannelConversionGraph::price(const IntervalEstimate& cardinality) const {
  std::vector<IntervalEstimate> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.push_back(e.cost.evaluate(cardinality, e.units));
  return out;
}

Kernelized kernelize(const ChannelConversionGraph& ccg, const std::vector<TargetSet>& sets) {
  Kernelized out;
  out.origin.assign(sets.size(), -1);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (out.origin[i] >= 0) continue;
    std::vector<std::size_t> group{i};
    for (std::size_t j = i + 1; j < sets.size(); ++j) {
      if (out.origin[j] < 0 && sets[j] == sets[i]) group.push_back(j);
    }
    int reusable = 0, non_reusable = 0;
    for (int c : sets[i]) (ccg.reusable(c) ? reusable : non_reusable)++;
    const int k = static_cast<int>(out.sets.size());
    if (group.size() > 1 && reusable >= 1 && non_reusable <= 1) {
      TargetSet merged;
      for (int c : sets[i]) {
        if (ccg.reusable(c)) merged.push_back(c);
      }
      out.sets.push_back(std::move(merged));
      for (std::size_t g : group) out.origin[g] = k;
    } else {
      out.sets.push_back(sets[i]);
      out.origin[i] = k;
    }
  }
  return out;
}

std::string ConversionTree::canonical(const ChannelConversionGraph& ccg) const {
  std::vector<std::string> parts;
  for (int e : edges) {
    const auto& edge = ccg.edges()[e];
    parts.push_back(ccg.channels()[edge.from].id + "->" + ccg.channels()[edge.to].id + "#" + edge.op);
  }
  std::sort(parts.begin(), parts.end());
  std::string out = root >= 0 ? ccg.channels()[root].id : "";
  for (const auto& p : parts) out += ";" + p;
  return out;
}

std::vector<int> ConversionTree::channels(const ChannelConversionGraph& ccg) const {
  std::vector<int> out{root};
  for (int e : edges) out.push_back(ccg.edges()[e].to);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

void check_inputs(const ChannelConversionGraph& ccg, int root, const std::vector<TargetSet>& targets,
                  const std::vector<IntervalEstimate>& edge_costs) {
  const int n = static_cast<int>(ccg.channels().size());
  if (root < 0 || root >= n) throw Error(ErrorCode::kInvalidArgument, "root channel does not exist");
  if (edge_costs.size() != ccg.edges().size()) throw Error(ErrorCode::kInvalidArgument, "edge cost vector size mismatch");
  for (const auto& c : edge_costs) {
    if (!(c.low >= 0.0) || !(c.high >= c.low)) throw Error(ErrorCode::kInvalidArgument, "conversion costs must be >= 0");
  }
  if (targets.size() > 31) throw Error(ErrorCode::kInvalidArgument, "at most 31 target channel sets");
  for (const auto& set : targets) {
    if (set.empty()) throw Error(ErrorCode::kInvalidArgument, "target channel sets must be nonempty");
    for (int c : set) {
      if (c < 0 || c >= n) throw Error(ErrorCode::kInvalidArgument, "target channel does not exist");
    }
  }
}

// Sums in sorted edge order so equal trees always get bit-identical costs.
void finish_costs(ConversionTree& tree, const std::vector<IntervalEstimate>& edge_costs) {
  std::sort(tree.edges.begin(), tree.edges.end());
  tree.cost_interval = {0.0, 0.0, 1.0};
  tree.cost = 0.0;
  for (int e : tree.edges) {
    tree.cost_interval = tree.cost_interval + edge_costs[e];
    tree.cost += edge_costs[e].midpoint();
  }
}

// Partial conversion tree from the currently visited channel.
struct Pct {
  std::uint32_t mask = 0;    // satisfied (kernel) target sets
  std::uint64_t chans = 0;   // channels used, root included
  double cost = 0.0;
  std::vector<int> edges;    // sorted
  std::vector<int> sat;      // channel per kernel target set, -1 if unsatisfied
};

bool subset(std::uint64_t a, std::uint64_t b) { return (a & ~b) == 0; }

// Dictionary of partial trees keyed by satisfied subsets. A key may hold
// several trees that use incomparable channel sets.
class PctDictionary {
 public:
  void update(Pct p) {
    auto& bucket = buckets_[p.mask];
    for (const Pct& q : bucket) {
      if (subset(q.chans, p.chans) && q.cost <= p.cost) {
        if (q.chans != p.chans || q.cost != p.cost || q.edges <= p.edges) return;
      }
    }
    std::erase_if(bucket, [&](const Pct& q) { return subset(p.chans, q.chans) && p.cost <= q.cost; });
    bucket.push_back(std::move(p));
  }

  std::vector<Pct> entries() && {
    std::vector<Pct> out;
    for (auto& [mask, bucket] : buckets_) {
      for (auto& p : bucket) out.push_back(std::move(p));
    }
    return out;
  }

  const std::vector<Pct>* find(std::uint32_t mask) const {
    auto it = buckets_.find(mask);
    return it == buckets_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::uint32_t, std::vector<Pct>> buckets_;
};

class MctSearch {
 public:
  MctSearch(const ChannelConversionGraph& ccg, const std::vector<TargetSet>& sets,
            const std::vector<IntervalEstimate>& edge_costs)
      : ccg_(ccg), k_(static_cast<int>(sets.size())), all_((k_ == 32) ? ~0u : ((1u << k_) - 1)) {
    member_.assign(ccg.channels().size(), 0);
    for (int i = 0; i < k_; ++i) {
      for (int c : sets[i]) member_[c] |= 1u << i;
    }
    for (const auto& c : edge_costs) edge_scalar_.push_back(c.midpoint());
    distances();
  }

  std::uint32_t all() const { return all_; }

  // `above` is the cost of the path from the root to c.
  PctDictionary traverse(int c, std::uint64_t visited, std::uint32_t satisfied, double above = 0.0) {
    PctDictionary result;
    if (above + lower_bound(c, satisfied) > bound_ + slack()) return result;
    const bool reusable = ccg_.reusable(c);
    const std::uint32_t fresh = member_[c] & ~satisfied;
    const std::uint32_t open = all_ & ~satisfied;
    auto keep = [&](Pct p) {
      if (above + p.cost > bound_ + slack()) return;
      if (p.mask == open) bound_ = std::min(bound_, above + p.cost);
      result.update(std::move(p));
    };

    // Visit: c itself serves target sets.
    if (fresh != 0) {
      if (reusable) {
        for (std::uint32_t s = fresh; s != 0; s = (s - 1) & fresh) keep(leaf(c, s));
      } else {
        for (int i = 0; i < k_; ++i) {
          if (fresh & (1u << i)) keep(leaf(c, 1u << i));
        }
      }
      if ((satisfied | fresh) == all_ && (reusable || std::popcount(fresh) == 1)) return result;
    }

    // Forward traversal.
    visited |= std::uint64_t{1} << c;
    const std::uint32_t passed = reusable ? (satisfied | fresh) : satisfied;
    std::vector<std::vector<Pct>> children;
    for (int e : ccg_.out_edges(c)) {
      const int next = ccg_.edges()[e].to;
      if (visited & (std::uint64_t{1} << next)) continue;
      auto grown = traverse(next, visited, passed, above + edge_scalar_[e]).entries();
      if (grown.empty()) continue;
      for (Pct& p : grown) {
        p.cost += edge_scalar_[e];
        p.edges.insert(std::lower_bound(p.edges.begin(), p.edges.end(), e), e);
      }
      children.push_back(std::move(grown));
    }

    // Merge: combinations of 1..d partial trees from distinct children that
    // neither share satisfied sets nor channels.
    const int d = reusable ? k_ - std::popcount(passed) : 1;
    std::vector<const Pct*> chosen;
    std::function<void(std::size_t, std::uint32_t, std::uint64_t, double)> combine =
        [&](std::size_t g, std::uint32_t mask, std::uint64_t chans, double cost) {
          if (g == children.size()) {
            if (chosen.empty()) return;
            Pct merged;
            merged.mask = mask;
            merged.chans = chans | (std::uint64_t{1} << c);
            merged.cost = cost;
            merged.sat.assign(k_, -1);
            for (const Pct* p : chosen) {
              merged.edges.insert(merged.edges.end(), p->edges.begin(), p->edges.end());
              for (int i = 0; i < k_; ++i) {
                if (p->sat[i] >= 0) merged.sat[i] = p->sat[i];
              }
            }
            std::sort(merged.edges.begin(), merged.edges.end());
            if (reusable && fresh != 0) {
              // c may additionally serve any subset of the sets it satisfies.
              for (std::uint32_t s = fresh;; s = (s - 1) & fresh) {
                Pct extended = merged;
                extended.mask |= s;
                for (int i = 0; i < k_; ++i) {
                  if (s & (1u << i)) extended.sat[i] = c;
                }
                keep(std::move(extended));
                if (s == 0) break;
              }
            } else {
              keep(std::move(merged));
            }
            return;
          }
          combine(g + 1, mask, chans, cost);
          if (static_cast<int>(chosen.size()) >= d) return;
          for (const Pct& p : children[g]) {
            if ((p.mask & mask) || (p.chans & chans)) continue;
            chosen.push_back(&p);
            combine(g + 1, mask | p.mask, chans | p.chans, cost + p.cost);
            chosen.pop_back();
          }
        };
    combine(0, 0, 0, 0.0);
    return result;
  }

 private:
  // Cheapest conversion path from every channel to some member of each set,
  // ignoring reusability.
  void distances() {
    const int n = static_cast<int>(ccg_.channels().size());
    const double inf = std::numeric_limits<double>::infinity();
    dist_.assign(k_, std::vector<double>(n, inf));
    for (int i = 0; i < k_; ++i) {
      auto& d = dist_[i];
      for (int c = 0; c < n; ++c) {
        if (member_[c] & (1u << i)) d[c] = 0.0;
      }
      for (int round = 0; round < n; ++round) {
        bool changed = false;
        for (std::size_t e = 0; e < ccg_.edges().size(); ++e) {
          const auto& edge = ccg_.edges()[e];
          if (d[edge.to] + edge_scalar_[e] < d[edge.from]) {
            d[edge.from] = d[edge.to] + edge_scalar_[e];
            changed = true;
          }
        }
        if (!changed) break;
      }
    }
  }

  // Any useful subtree below c serves at least one open set.
  double lower_bound(int c, std::uint32_t satisfied) const {
    double lb = std::numeric_limits<double>::infinity();
    for (int i = 0; i < k_; ++i) {
      if (!(satisfied & (1u << i))) lb = std::min(lb, dist_[i][c]);
    }
    return lb;
  }

  double slack() const { return 1e-9 * std::max(1.0, std::abs(bound_)); }

  Pct leaf(int c, std::uint32_t sets) const {
    Pct p;
    p.mask = sets;
    p.chans = std::uint64_t{1} << c;
    p.sat.assign(k_, -1);
    for (int i = 0; i < k_; ++i) {
      if (sets & (1u << i)) p.sat[i] = c;
    }
    return p;
  }

  const ChannelConversionGraph& ccg_;
  int k_;
  std::uint32_t all_;
  std::vector<std::uint32_t> member_;
  std::vector<double> edge_scalar_;
  std::vector<std::vector<double>> dist_;
  double bound_ = std::numeric_limits<double>::infinity();
};

bool better(const ConversionTree& a, const ConversionTree& b, const ChannelConversionGraph& ccg) {
  if (a.cost != b.cost) return a.cost < b.cost;
  return a.canonical(ccg) < b.canonical(ccg);
}

}  // namespace

ConversionTree find_mct(const ChannelConversionGraph& ccg, int root, const std::vector<TargetSet>& targets,
                        const IntervalEstimate& cardinality) {
  return find_mct(ccg, root, targets, ccg.price(cardinality));
}

ConversionTree find_mct(const ChannelConversionGraph& ccg, int root, const std::vector<TargetSet>& targets,
                        const std::vector<IntervalEstimate>& edge_costs) {
  check_inputs(ccg, root, targets, edge_costs);
  ConversionTree best;
  best.root = root;
  if (targets.empty()) return best;

  Kernelized kernel = kernelize(ccg, targets);
  MctSearch search(ccg, kernel.sets, edge_costs);
  PctDictionary dict = search.traverse(root, 0, 0);
  const std::vector<Pct>* complete = dict.find(search.all());
  if (complete == nullptr || complete->empty()) {
    throw Error(ErrorCode::kNoConversionTree, "NoConversionTree: some target channel set is unreachable from '" +
                                                   ccg.channels()[root].id + "'");
  }
  bool found = false;
  for (const Pct& p : *complete) {
    ConversionTree t;
    t.root = root;
    t.edges = p.edges;
    for (std::size_t i = 0; i < targets.size(); ++i) t.target_channel.push_back(p.sat[kernel.origin[i]]);
    finish_costs(t, edge_costs);
    if (!found || better(t, best, ccg)) {
      best = std::move(t);
      found = true;
    }
  }
  return best;
}

ConversionTree brute_force_mct(const ChannelConversionGraph& ccg, int root, const std::vector<TargetSet>& targets,
                               const IntervalEstimate& cardinality) {
  return brute_force_mct(ccg, root, targets, ccg.price(cardinality));
}

ConversionTree brute_force_mct(const ChannelConversionGraph& ccg, int root, const std::vector<TargetSet>& targets,
                               const std::vector<IntervalEstimate>& edge_costs) {
  if (ccg.channels().size() > kBruteForceChannelLimit) {
    throw Error(ErrorCode::kInstanceTooLarge, "brute_force_mct is limited to " +
                                                  std::to_string(kBruteForceChannelLimit) + " channels");
  }
  check_inputs(ccg, root, targets, edge_costs);
  const int n = static_cast<int>(ccg.channels().size());

  ConversionTree best;
  bool found = false;
  std::vector<int> tree_edges;
  std::vector<int> outdeg(n, 0);

  // Assign every target set to a tree channel; a non-reusable channel has room
  // for one successor in total (conversion or consumer).
  auto assign = [&](std::uint64_t in_tree, std::vector<int>& chosen) {
    std::vector<int> load(n, 0);
    std::function<bool(std::size_t)> go = [&](std::size_t i) {
      if (i == targets.size()) return true;
      for (int c : targets[i]) {
        if (!(in_tree & (std::uint64_t{1} << c))) continue;
        if (!ccg.reusable(c) && outdeg[c] + load[c] >= 1) continue;
        ++load[c];
        chosen[i] = c;
        if (go(i + 1)) return true;
        --load[c];
      }
      return false;
    };
    return go(0);
  };

  std::function<void(std::uint64_t, std::vector<int>)> grow = [&](std::uint64_t in_tree, std::vector<int> frontier) {
    if (frontier.empty()) {
      std::vector<int> chosen(targets.size(), -1);
      if (!assign(in_tree, chosen)) return;
      ConversionTree t;
      t.root = root;
      t.edges = tree_edges;
      t.target_channel = chosen;
      finish_costs(t, edge_costs);
      if (!found || better(t, best, ccg)) {
        best = std::move(t);
        found = true;
      }
      return;
    }
    const int e = frontier.back();
    frontier.pop_back();
    grow(in_tree, frontier);  // without e

    const int v = ccg.edges()[e].to;
    const int u = ccg.edges()[e].from;
    if (!ccg.reusable(u) && outdeg[u] >= 1) return;
    std::vector<int> next;
    for (int f : frontier) {
      if (ccg.edges()[f].to != v) next.push_back(f);
    }
    const std::uint64_t with_v = in_tree | (std::uint64_t{1} << v);
    for (int f : ccg.out_edges(v)) {
      if (!(with_v & (std::uint64_t{1} << ccg.edges()[f].to))) next.push_back(f);
    }
    ++outdeg[u];
    tree_edges.push_back(e);
    grow(with_v, std::move(next));
    tree_edges.pop_back();
    --outdeg[u];
  };

  std::vector<int> frontier;
  for (int e : ccg.out_edges(root)) {
    if (ccg.edges()[e].to != root) frontier.push_back(e);
  }
  grow(std::uint64_t{1} << root, frontier);
  if (!found) {
    throw Error(ErrorCode::kNoConversionTree, "NoConversionTree: some target channel set is unreachable from '" +
                                                   ccg.channels()[root].id + "'");
  }
  return best;
}

std::string check_conversion_tree(const ChannelConversionGraph& ccg, const ConversionTree& tree,
                                  const std::vector<TargetSet>& targets) {
  const int n = static_cast<int>(ccg.channels().size());
  std::vector<int> indeg(n, 0), outdeg(n, 0), consumers(n, 0);
  std::uint64_t in_tree = std::uint64_t{1} << tree.root;
  for (int e : tree.edges) {
    const auto& edge = ccg.edges()[e];
    ++indeg[edge.to];
    ++outdeg[edge.from];
  }
  // Reachability from the root along tree edges.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int e : tree.edges) {
      const auto& edge = ccg.edges()[e];
      if ((in_tree >> edge.from & 1) && !(in_tree >> edge.to & 1)) {
        in_tree |= std::uint64_t{1} << edge.to;
        changed = true;
      }
    }
  }
  for (int e : tree.edges) {
    const auto& edge = ccg.edges()[e];
    if (!(in_tree >> edge.to & 1)) return "edge into unreachable channel " + ccg.channels()[edge.to].id;
    if (indeg[edge.to] != 1 || edge.to == tree.root) return "channel " + ccg.channels()[edge.to].id + " is not a tree node";
  }
  if (tree.target_channel.size() != targets.size()) return "target assignment size mismatch";
  for (std::size_t i = 0; i < targets.size(); ++i) {
    int c = tree.target_channel[i];
    if (c < 0 || !(in_tree >> c & 1)) return "target set " + std::to_string(i) + " not reached";
    if (std::find(targets[i].begin(), targets[i].end(), c) == targets[i].end()) return "target set " + std::to_string(i) + " served by a foreign channel";
    ++consumers[c];
  }
  for (int c = 0; c < n; ++c) {
    if ((in_tree >> c & 1) && !ccg.reusable(c) && outdeg[c] + consumers[c] > 1) {
      return "non-reusable channel " + ccg.channels()[c].id + " has several successors";
    }
  }
  return "";
}

}  // namespace xflow

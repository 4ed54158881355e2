/*
 * Copyright The xflow Authors.
 * SPDX-License-Identifier: Apache-2.0
 */

#include "xflow/catalog.hpp"

#include <filesystem>
#include <set>

#include "json_util.hpp"
#include "xflow/error.hpp"

namespace xflow {

UnitCosts derive_unit_costs(int cores, int nodes) {
  const double parallelism = std::max(1, cores) * std::max(1, nodes);
  const double machines = std::max(1, nodes);
  return {1.0 / parallelism, 1.0 / machines, 1.0 / machines, 1.0};
}

void PlatformCatalog::finalize(bool require_platforms) {
  platform_index_.clear();
  channel_index_.clear();
  operator_index_.clear();
  if (require_platforms && platforms.empty()) {
    throw Error(ErrorCode::kSchema, "catalog.platforms: at least one platform is required");
  }
  if (platforms.size() > 64) throw Error(ErrorCode::kSchema, "catalog.platforms: at most 64 platforms");
  auto index = [](auto& map, const std::string& id, int i, const std::string& what) {
    if (id.empty()) throw Error(ErrorCode::kSchema, what + ": empty id");
    if (!map.emplace(id, i).second) throw Error(ErrorCode::kSchema, what + ": duplicate id '" + id + "'");
  };
  for (std::size_t i = 0; i < platforms.size(); ++i) {
    index(platform_index_, platforms[i].id, static_cast<int>(i), "catalog.platforms[" + std::to_string(i) + "]");
    if (platforms[i].startup < 0) throw Error(ErrorCode::kSchema, "platform '" + platforms[i].id + "': negative startup cost");
    for (double u : platforms[i].unit_costs) {
      if (u < 0) throw Error(ErrorCode::kSchema, "platform '" + platforms[i].id + "': negative unit cost");
    }
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    index(channel_index_, channels[i].id, static_cast<int>(i), "catalog.channels[" + std::to_string(i) + "]");
  }
  for (std::size_t i = 0; i < operators.size(); ++i) {
    index(operator_index_, operators[i].id, static_cast<int>(i), "catalog.operators[" + std::to_string(i) + "]");
  }

  auto check_channel = [&](const std::string& id, const std::string& where) {
    if (channel_index(id) < 0) throw Error(ErrorCode::kSchema, where + ": undefined channel '" + id + "'");
  };
  auto check_platform = [&](const std::string& id, const std::string& where) {
    if (!id.empty() && platform_index(id) < 0) {
      throw Error(ErrorCode::kSchema, where + ": undefined platform '" + id + "'");
    }
  };
  auto check_cost = [&](const std::string& ref, const std::string& where) {
    if (!ref.empty() && !cost_functions.count(ref)) {
      throw Error(ErrorCode::kUnknownCostFunction, where + ": unknown cost function '" + ref + "'");
    }
  };
  for (const ExecutionOperator& op : operators) {
    const std::string where = "operator '" + op.id + "'";
    if (op.platform.empty()) throw Error(ErrorCode::kSchema, where + ": missing platform");
    check_platform(op.platform, where);
    for (const auto& set : op.input_channels) {
      if (set.empty()) throw Error(ErrorCode::kSchema, where + ": empty input channel set");
      for (const auto& c : set) check_channel(c, where);
    }
    for (const auto& c : op.output_channels) check_channel(c, where);
    check_cost(op.cost_ref, where);
  }
  for (const Conversion& conv : conversions) {
    const std::string where = "conversion '" + conv.id + "'";
    check_channel(conv.from, where);
    check_channel(conv.to, where);
    if (conv.from == conv.to) throw Error(ErrorCode::kSchema, where + ": self-loop conversion");
    check_platform(conv.platform, where);
    check_cost(conv.cost_ref, where);
  }
  for (const OperatorMapping& m : mappings) {
    const std::string where = "mapping '" + m.id + "'";
    if (m.pattern.nodes.empty()) throw Error(ErrorCode::kSchema, where + ": empty pattern");
    if (m.substitute.empty()) throw Error(ErrorCode::kSchema, where + ": empty substitute");
    for (const auto& [a, b] : m.pattern.edges) {
      const int n = static_cast<int>(m.pattern.nodes.size());
      if (a < 0 || b < 0 || a >= n || b >= n) throw Error(ErrorCode::kSchema, where + ": pattern edge out of range");
    }
    for (const SubstituteStep& step : m.substitute) {
      if (!step.exec_op.empty() && operator_index(step.exec_op) < 0) {
        throw Error(ErrorCode::kSchema, where + ": undefined execution operator '" + step.exec_op + "'");
      }
      if (step.exec_op.empty() == step.kind.empty()) {
        throw Error(ErrorCode::kSchema, where + ": each substitute step names exactly one of op/kind");
      }
    }
  }
}

int PlatformCatalog::platform_index(std::string_view id) const {
  auto it = platform_index_.find(id);
  return it == platform_index_.end() ? -1 : it->second;
}

int PlatformCatalog::channel_index(std::string_view id) const {
  auto it = channel_index_.find(id);
  return it == channel_index_.end() ? -1 : it->second;
}

int PlatformCatalog::operator_index(std::string_view id) const {
  auto it = operator_index_.find(id);
  return it == operator_index_.end() ? -1 : it->second;
}

const CostFunction& PlatformCatalog::cost_function(std::string_view ref) const {
  auto it = cost_functions.find(std::string(ref));
  if (it == cost_functions.end()) {
    throw Error(ErrorCode::kUnknownCostFunction, "unknown cost function '" + std::string(ref) + "'");
  }
  return it->second;
}

UnitCosts PlatformCatalog::unit_costs(std::string_view platform) const {
  int p = platform_index(platform);
  return p < 0 ? kUnitCostsOne : platforms[p].unit_costs;
}

std::vector<int> PlatformCatalog::input_set(const ExecutionOperator& op, int slot) const {
  std::vector<int> out;
  if (op.input_channels.empty()) return out;
  const auto& names = op.input_channels[std::min<std::size_t>(slot, op.input_channels.size() - 1)];
  for (const auto& n : names) out.push_back(channel_index(n));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int PlatformCatalog::output_channel(const ExecutionOperator& op, int slot) const {
  if (op.output_channels.empty()) return -1;
  return channel_index(op.output_channels[std::min<std::size_t>(slot, op.output_channels.size() - 1)]);
}

namespace {

using detail::Json;

CostFunction parse_cost(const Json& j, const std::string& path) {
  CostFunction f;
  if (j.is_number()) {
    f[Resource::kCpu].beta = j.get<double>();
    return f;
  }
  if (!j.is_object()) detail::schema_error(path, "expected a cost object or number");
  for (auto it = j.begin(); it != j.end(); ++it) {
    int r = -1;
    for (std::size_t i = 0; i < kResourceNames.size(); ++i) {
      if (it.key() == kResourceNames[i]) r = static_cast<int>(i);
    }
    if (r < 0) detail::schema_error(path + "." + it.key(), "unknown resource");
    const std::string rp = path + "." + it.key();
    f.resources[r].alpha = detail::opt_number(*it, "alpha", rp).value_or(0.0);
    f.resources[r].beta = detail::opt_number(*it, "beta", rp).value_or(0.0);
  }
  return f;
}

std::vector<std::string> string_list(const Json& j, const std::string& path) {
  if (j.is_string()) return {j.get<std::string>()};
  if (!j.is_array()) detail::schema_error(path, "expected a string or an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) detail::schema_error(path + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

// Cost given inline gets a synthetic ref so every operator resolves through
// the cost-function table.
std::string cost_ref_of(PlatformCatalog& cat, const Json& j, const std::string& owner,
                        const std::string& path) {
  if (auto ref = detail::opt_string(j, "costRef", path)) return *ref;
  auto it = j.find("cost");
  if (it == j.end()) {
    cat.cost_functions.emplace(owner, CostFunction{});
    return owner;
  }
  cat.cost_functions[owner] = parse_cost(*it, path + ".cost");
  return owner;
}

void merge_document(PlatformCatalog& cat, const Json& doc, const std::filesystem::path& base,
                    const std::string& root, int depth) {
  using namespace detail;
  if (!doc.is_object()) schema_error(root, "expected an object");
  if (depth > 8) schema_error(root, "include nesting too deep");
  if (auto it = doc.find("include"); it != doc.end()) {
    for (const auto& inc : string_list(*it, root + ".include")) {
      std::filesystem::path p = base / inc;
      Json sub = parse_json(read_file(p.string()), p.string());
      merge_document(cat, sub, p.parent_path(), p.string(), depth + 1);
    }
  }
  if (auto it = doc.find("costFunctions"); it != doc.end()) {
    if (!it->is_object()) schema_error(root + ".costFunctions", "expected an object");
    for (auto jt = it->begin(); jt != it->end(); ++jt) {
      cat.cost_functions[jt.key()] = parse_cost(*jt, root + ".costFunctions." + jt.key());
    }
  }
  if (doc.contains("platforms")) {
    const Json& ps = get_array(doc, "platforms", root);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const std::string path = index_path(root, "platforms", i);
      PlatformProfile p;
      p.id = get_string(ps[i], "id", path);
      p.startup = opt_number(ps[i], "startup", path).value_or(0.0);
      if (auto hw = ps[i].find("hardware"); hw != ps[i].end()) {
        p.cores = opt_int(*hw, "cores", path + ".hardware").value_or(1);
        p.nodes = opt_int(*hw, "nodes", path + ".hardware").value_or(1);
      }
      if (auto uc = ps[i].find("unitCosts"); uc != ps[i].end()) {
        p.unit_costs = {0.0, 0.0, 0.0, 0.0};
        for (std::size_t r = 0; r < kResourceNames.size(); ++r) {
          p.unit_costs[r] = opt_number(*uc, std::string(kResourceNames[r]).c_str(), path + ".unitCosts").value_or(0.0);
        }
      } else {
        p.unit_costs = derive_unit_costs(p.cores, p.nodes);
      }
      cat.platforms.push_back(std::move(p));
    }
  }
  if (doc.contains("channels")) {
    const Json& cs = get_array(doc, "channels", root);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string path = index_path(root, "channels", i);
      cat.channels.push_back({get_string(cs[i], "id", path), opt_bool(cs[i], "reusable", path, false)});
    }
  }
  if (doc.contains("operators")) {
    const Json& os = get_array(doc, "operators", root);
    for (std::size_t i = 0; i < os.size(); ++i) {
      const std::string path = index_path(root, "operators", i);
      const Json& o = os[i];
      ExecutionOperator op;
      op.id = get_string(o, "id", path);
      op.platform = get_string(o, "platform", path);
      if (auto it = o.find("implements"); it != o.end()) op.implements = string_list(*it, path + ".implements");
      if (auto it = o.find("inputs"); it != o.end()) {
        if (!it->is_array()) schema_error(path + ".inputs", "expected an array of channel sets");
        for (std::size_t s = 0; s < it->size(); ++s) {
          op.input_channels.push_back(string_list((*it)[s], path + ".inputs[" + std::to_string(s) + "]"));
        }
      }
      if (auto it = o.find("outputs"); it != o.end()) op.output_channels = string_list(*it, path + ".outputs");
      op.cost_ref = cost_ref_of(cat, o, "op:" + op.id, path);
      cat.operators.push_back(std::move(op));
    }
  }
  if (doc.contains("conversions")) {
    const Json& cs = get_array(doc, "conversions", root);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const std::string path = index_path(root, "conversions", i);
      Conversion c;
      c.from = get_string(cs[i], "from", path);
      c.to = get_string(cs[i], "to", path);
      c.id = opt_string(cs[i], "id", path).value_or(c.from + "->" + c.to);
      c.platform = opt_string(cs[i], "platform", path).value_or("");
      c.cost_ref = cost_ref_of(cat, cs[i], "conv:" + c.id, path);
      cat.conversions.push_back(std::move(c));
    }
  }
  if (doc.contains("mappings")) {
    const Json& ms = get_array(doc, "mappings", root);
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string path = index_path(root, "mappings", i);
      const Json& m = ms[i];
      OperatorMapping mapping;
      mapping.id = opt_string(m, "id", path).value_or("mapping" + std::to_string(cat.mappings.size()));
      const Json& pattern = require(m, "pattern", path);
      if (pattern.is_string()) {
        mapping.pattern.nodes.push_back({pattern.get<std::string>(), std::nullopt, std::nullopt});
      } else {
        const Json& nodes = get_array(pattern, "nodes", path + ".pattern");
        for (std::size_t n = 0; n < nodes.size(); ++n) {
          const std::string np = index_path(path + ".pattern", "nodes", n);
          PatternNode node;
          node.kind = get_string(nodes[n], "kind", np);
          if (nodes[n].contains("hasSelectivity")) node.has_selectivity = opt_bool(nodes[n], "hasSelectivity", np, false);
          if (nodes[n].contains("hasUdf")) node.has_udf = opt_bool(nodes[n], "hasUdf", np, false);
          mapping.pattern.nodes.push_back(std::move(node));
        }
        if (pattern.contains("edges")) {
          const Json& es = get_array(pattern, "edges", path + ".pattern");
          for (std::size_t e = 0; e < es.size(); ++e) {
            if (!es[e].is_array() || es[e].size() != 2) {
              schema_error(index_path(path + ".pattern", "edges", e), "expected [from, to]");
            }
            mapping.pattern.edges.emplace_back(es[e][0].get<int>(), es[e][1].get<int>());
          }
        }
      }
      const Json& subs = get_array(m, "substitute", path);
      for (std::size_t s = 0; s < subs.size(); ++s) {
        const std::string sp = index_path(path, "substitute", s);
        SubstituteStep step;
        if (subs[s].is_string()) {
          step.exec_op = subs[s].get<std::string>();
        } else {
          step.exec_op = opt_string(subs[s], "op", sp).value_or("");
          step.kind = opt_string(subs[s], "kind", sp).value_or("");
        }
        mapping.substitute.push_back(std::move(step));
      }
      cat.mappings.push_back(std::move(mapping));
    }
  }
}

}  // namespace

PlatformCatalog parse_catalog(std::string_view text, const std::string& base_dir,
                              bool require_platforms) {
  PlatformCatalog cat;
  merge_document(cat, detail::parse_json(text, "catalog"), base_dir, "catalog", 0);
  cat.finalize(require_platforms);
  return cat;
}

PlatformCatalog load_catalog(const std::string& path, bool require_platforms) {
  return load_catalog(std::vector<std::string>{path}, require_platforms);
}

PlatformCatalog load_catalog(const std::vector<std::string>& paths, bool require_platforms) {
  PlatformCatalog cat;
  for (const auto& path : paths) {
    std::filesystem::path p(path);
    merge_document(cat, detail::parse_json(detail::read_file(path), path), p.parent_path(), path, 0);
  }
  cat.finalize(require_platforms);
  return cat;
}

}  // namespace xflow

#include "blueprintd/blueprint.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"
#include "blueprintd/pricing.hpp"

#include <algorithm>

namespace blueprintd {

std::string to_string(const Provisioning& p) {
  return std::string(to_string(p.engine)) + "(" + p.instance_type + " x" +
         std::to_string(p.node_count) + ")";
}

std::string_view to_string(ChangeKind k) noexcept {
  switch (k) {
  case ChangeKind::InstanceChange:
    return "instance_change";
  case ChangeKind::ElasticResize:
    return "elastic_resize";
  case ChangeKind::ClassicResize:
    return "classic_resize";
  case ChangeKind::Pause:
    return "pause";
  case ChangeKind::Unpause:
    return "unpause";
  case ChangeKind::ReplicaRemove:
    return "replica_remove";
  }
  return "?";
}

const Provisioning* Blueprint::provisioning(EngineId e) const {
  auto it = provisionings.find(e);
  return it == provisionings.end() ? nullptr : &it->second;
}

bool Blueprint::serving(EngineId e) const {
  const auto* p = provisioning(e);
  return engines.contains(e) && p != nullptr && p->serving();
}

EngineSet Blueprint::serving_engines() const {
  EngineSet s;
  for (auto e : kAllEngines) {
    if (serving(e)) s.insert(e);
  }
  return s;
}

std::string Blueprint::canonical() const {
  std::string out = "E" + std::to_string(engines.bits()) + "|P";
  for (const auto& [e, p] : provisionings) {
    out += std::string(to_string(e)) + ":" + p.instance_type + ":" + std::to_string(p.node_count) +
           ":" + std::to_string(p.vcpus_per_node) + ";";
  }
  out += "|L";
  for (const auto& [t, s] : placement.placement) out += t + "=" + std::to_string(s.bits()) + ";";
  out += "|W";
  for (const auto& [t, e] : placement.writer) out += t + "=" + std::to_string(engine_index(e)) + ";";
  out += "|A";
  for (const auto& [q, e] : routing.assignments) out += q + "=" + std::to_string(engine_index(e)) + ";";
  return out;
}

std::uint64_t Blueprint::hash() const { return fnv1a(canonical()); }

nlohmann::json Blueprint::to_json() const {
  nlohmann::json engines_j = nlohmann::json::array();
  for (auto e : engines.members()) engines_j.push_back(std::string(to_string(e)));
  nlohmann::json prov = nlohmann::json::object();
  for (const auto& [e, p] : provisionings) {
    prov[std::string(to_string(e))] = {{"instance_type", p.instance_type},
                                       {"node_count", p.node_count},
                                       {"vcpus_per_node", p.vcpus_per_node}};
  }
  nlohmann::json place = nlohmann::json::object();
  for (const auto& [t, s] : placement.placement) {
    nlohmann::json list = nlohmann::json::array();
    for (auto e : s.members()) list.push_back(std::string(to_string(e)));
    place[t] = list;
  }
  nlohmann::json writer = nlohmann::json::object();
  for (const auto& [t, e] : placement.writer) writer[t] = std::string(to_string(e));
  nlohmann::json assign = nlohmann::json::object();
  for (const auto& [q, e] : routing.assignments) assign[q] = std::string(to_string(e));
  return {{"engines", engines_j},
          {"provisionings", prov},
          {"placement", place},
          {"writer", writer},
          {"assignments", assign}};
}

Blueprint Blueprint::from_json(const nlohmann::json& doc, const PricingCatalog* pricing) {
  Blueprint bp;
  try {
    for (const auto& e : doc.at("engines")) bp.engines.insert(engine_from_string(e.get<std::string>()));
    for (const auto& [name, jp] : doc.at("provisionings").items()) {
      Provisioning p;
      p.engine = engine_from_string(name);
      p.instance_type = jp.value("instance_type", std::string{});
      p.node_count = jp.value("node_count", 0);
      if (jp.contains("vcpus_per_node")) {
        p.vcpus_per_node = jp.at("vcpus_per_node").get<int>();
      } else if (pricing != nullptr && p.engine != EngineId::ScanService) {
        p.vcpus_per_node = pricing->instance(p.engine, p.instance_type).vcpus;
      }
      if (p.node_count < 0 || p.vcpus_per_node <= 0) {
        throw ConfigError("invalid provisioning for " + name);
      }
      bp.provisionings[p.engine] = p;
    }
    for (const auto& [table, list] : doc.at("placement").items()) {
      EngineSet s;
      for (const auto& e : list) s.insert(engine_from_string(e.get<std::string>()));
      bp.placement.placement[table] = s;
    }
    for (const auto& [table, e] : doc.at("writer").items()) {
      bp.placement.writer[table] = engine_from_string(e.get<std::string>());
    }
    if (doc.contains("assignments")) {
      for (const auto& [q, e] : doc.at("assignments").items()) {
        bp.routing.assignments[q] = engine_from_string(e.get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("blueprint: ") + e.what());
  }
  return bp;
}

bool TransitionPlan::has(ChangeKind k) const {
  return std::any_of(provisioning_changes.begin(), provisioning_changes.end(),
                     [k](const auto& c) { return c.kind == k; });
}

nlohmann::json TransitionPlan::to_json() const {
  nlohmann::json moves = nlohmann::json::array();
  for (const auto& m : table_moves) {
    moves.push_back({{"table", m.table},
                     {"source", std::string(to_string(m.source))},
                     {"dest", std::string(to_string(m.dest))},
                     {"bytes", m.bytes}});
  }
  nlohmann::json changes = nlohmann::json::array();
  for (const auto& c : provisioning_changes) {
    changes.push_back({{"engine", std::string(to_string(c.engine))},
                       {"from", to_string(c.from)},
                       {"to", to_string(c.to)},
                       {"kind", std::string(to_string(c.kind))},
                       {"instance_changes", c.instance_changes}});
  }
  return {{"table_moves", moves}, {"provisioning_changes", changes}};
}

ValidationReport validate_blueprint(const Blueprint& bp, const DatasetCatalog& catalog,
                                    std::span<const WorkloadQuery> workload) {
  ValidationReport report;
  auto violate = [&](std::string rule, std::string detail) {
    report.push_back({std::move(rule), std::move(detail)});
  };

  for (auto e : kAllEngines) {
    const bool in_set = bp.engines.contains(e);
    const bool has_prov = bp.provisioning(e) != nullptr;
    if (in_set && !has_prov) violate("provisioning missing", std::string(to_string(e)));
    if (!in_set && has_prov) violate("provisioning outside engine set", std::string(to_string(e)));
  }
  for (const auto& [e, p] : bp.provisionings) {
    if (p.engine != e) violate("provisioning engine mismatch", std::string(to_string(e)));
    if (p.node_count < 0) violate("negative node count", to_string(p));
    if (e == EngineId::ScanService && p.node_count != 0) {
      violate("serverless engine provisioned", to_string(p));
    }
  }
  if (!bp.serving(EngineId::RowStore)) {
    violate("transactional engine offline", "RowStore must run with at least one node");
  }

  // Placement.
  for (const auto& t : catalog.tables()) {
    auto it = bp.placement.placement.find(t.name);
    if (it == bp.placement.placement.end() || it->second.empty()) {
      violate("table not placed", t.name);
    }
  }
  for (const auto& [table, engines] : bp.placement.placement) {
    if (!catalog.contains(table)) violate("unknown table in placement", table);
    if ((engines & bp.engines) != engines) violate("placement outside engine set", table);
    auto w = bp.placement.writer.find(table);
    if (w == bp.placement.writer.end()) {
      violate("writer missing", table);
    } else if (!engines.contains(w->second)) {
      violate("writer not in placement", table);
    }
  }
  EngineSet holds_all = EngineSet::all();
  for (const auto& t : catalog.tables()) {
    auto it = bp.placement.placement.find(t.name);
    holds_all = holds_all & (it == bp.placement.placement.end() ? EngineSet{} : it->second);
  }
  if (holds_all.empty() && catalog.size() > 0) {
    violate("no co-located engine", "no single engine holds every table");
  }

  // Routing.
  for (const auto& [qid, e] : bp.routing.assignments) {
    if (!bp.engines.contains(e)) {
      violate("assigned engine not in set", qid);
    } else if (!bp.serving(e)) {
      violate("assigned engine not serving", qid);
    }
  }
  for (const auto& wq : workload) {
    auto it = bp.routing.assignments.find(wq.query_id);
    if (it == bp.routing.assignments.end()) continue;
    for (const auto& t : wq.query.tables) {
      auto p = bp.placement.placement.find(t);
      if (p == bp.placement.placement.end() || !p->second.contains(it->second)) {
        violate("assigned engine missing table", wq.query_id + " needs " + t);
      }
    }
  }
  return report;
}

bool has_violation(const ValidationReport& report, std::string_view rule) {
  return std::any_of(report.begin(), report.end(), [&](const auto& v) { return v.rule == rule; });
}

namespace {

Provisioning absent(EngineId e) {
  Provisioning p;
  p.engine = e;
  return p;
}

} // namespace

std::optional<ProvisioningChange> classify_change(EngineId e, const Provisioning& from,
                                                  const Provisioning& to) {
  if (from == to || e == EngineId::ScanService) return std::nullopt;
  ProvisioningChange c{e, from, to, ChangeKind::InstanceChange, 0};
  if (from.node_count > 0 && to.node_count == 0) {
    c.kind = ChangeKind::Pause;
  } else if (from.node_count == 0 && to.node_count > 0) {
    c.kind = ChangeKind::Unpause;
    c.instance_changes = e == EngineId::RowStore ? to.node_count : 0;
  } else if (from.node_count == 0 && to.node_count == 0) {
    return std::nullopt; // still off; instance label changes are free
  } else if (e == EngineId::RowStore) {
    if (from.instance_type != to.instance_type) {
      c.kind = ChangeKind::InstanceChange;
      c.instance_changes = to.node_count;
    } else if (to.node_count > from.node_count) {
      c.kind = ChangeKind::InstanceChange;
      c.instance_changes = to.node_count - from.node_count;
    } else {
      c.kind = ChangeKind::ReplicaRemove;
    }
  } else if (from.instance_type != to.instance_type) {
    c.kind = ChangeKind::ClassicResize;
  } else {
    c.kind = ChangeKind::ElasticResize;
  }
  return c;
}

TransitionPlan diff_blueprints(const Blueprint& current, const Blueprint& candidate,
                               const DatasetCatalog& catalog) {
  TransitionPlan plan;
  for (const auto& [table, engines] : candidate.placement.placement) {
    auto cur = current.placement.placement.find(table);
    const EngineSet before = cur == current.placement.placement.end() ? EngineSet{} : cur->second;
    EngineId source = EngineId::RowStore;
    if (auto w = current.placement.writer.find(table); w != current.placement.writer.end()) {
      source = w->second;
    } else if (auto w2 = candidate.placement.writer.find(table); w2 != candidate.placement.writer.end()) {
      source = w2->second;
    }
    const double bytes = catalog.contains(table) ? catalog.table(table).bytes : 0.0;
    for (auto e : engines.members()) {
      if (!before.contains(e)) plan.table_moves.push_back({table, source, e, bytes});
    }
  }
  for (auto e : kAllEngines) {
    const auto* f = current.provisioning(e);
    const auto* t = candidate.provisioning(e);
    auto change = classify_change(e, f ? *f : absent(e), t ? *t : absent(e));
    if (change) plan.provisioning_changes.push_back(*change);
  }
  return plan;
}

std::vector<std::string> CapabilityConfig::keyword_list() const {
  std::vector<std::string> out;
  for (const auto& [k, s] : keywords) out.push_back(k);
  return out;
}

EngineSet CapabilityConfig::supporting(std::span<const std::string> tokens) const {
  EngineSet s = EngineSet::all();
  for (const auto& t : tokens) {
    auto it = keywords.find(t);
    if (it != keywords.end()) s = s & it->second;
  }
  return s;
}

CapabilityConfig CapabilityConfig::from_json(const nlohmann::json& doc) {
  CapabilityConfig caps;
  try {
    for (const auto& [kw, list] : doc.items()) {
      EngineSet s;
      for (const auto& e : list) s.insert(engine_from_string(e.get<std::string>()));
      caps.keywords[kw] = s;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("capabilities: ") + e.what());
  }
  return caps;
}

nlohmann::json CapabilityConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [kw, s] : keywords) {
    nlohmann::json list = nlohmann::json::array();
    for (auto e : s.members()) list.push_back(std::string(to_string(e)));
    j[kw] = list;
  }
  return j;
}

EngineSet eligible_engines(const LogicalQuery& q, const Blueprint& bp, const CapabilityConfig& caps) {
  EngineSet s = bp.serving_engines();
  for (const auto& t : q.tables) {
    auto it = bp.placement.placement.find(t);
    s = s & (it == bp.placement.placement.end() ? EngineSet{} : it->second);
  }
  s = s & caps.supporting(q.capability_tokens);
  if (s.empty()) {
    throw EmptyEligibleSet("no engine holds all tables and capabilities of: " + render_query(q));
  }
  return s;
}

} // namespace blueprintd

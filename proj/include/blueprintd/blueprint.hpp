#pragma once

#include "blueprintd/catalog.hpp"
#include "blueprintd/engine.hpp"
#include "blueprintd/query.hpp"
#include "blueprintd/workload.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blueprintd {

struct PricingCatalog;
class RoutingForest;

struct Provisioning {
  EngineId engine = EngineId::RowStore;
  std::string instance_type;
  int node_count = 0; // 0 = off/paused
  int vcpus_per_node = 1;

  int total_vcpus() const noexcept { return node_count * vcpus_per_node; }
  /// ScanService is serverless and serves regardless of node count.
  bool serving() const noexcept { return engine == EngineId::ScanService || node_count > 0; }

  bool operator==(const Provisioning&) const = default;
};

/// One provisioning per engine, indexed by engine_index().
using ProvisioningSet = std::array<Provisioning, kEngineCount>;

std::string to_string(const Provisioning& p);

struct TablePlacement {
  std::map<std::string, EngineSet> placement;
  std::map<std::string, EngineId> writer;

  bool operator==(const TablePlacement&) const = default;
};

struct RoutingPolicy {
  std::map<std::string, EngineId> assignments; // query_id -> engine
  std::shared_ptr<const RoutingForest> online_policy;
};

/// Engine set, provisionings, table placement and routing: the unit of search.
struct Blueprint {
  EngineSet engines;
  std::map<EngineId, Provisioning> provisionings;
  TablePlacement placement;
  RoutingPolicy routing;

  const Provisioning* provisioning(EngineId e) const;
  bool serving(EngineId e) const;
  EngineSet serving_engines() const;

  /// Everything except the online policy, in a canonical textual form.
  std::string canonical() const;
  std::uint64_t hash() const;
  /// Equality of the planned design; ignores the trained online policy.
  bool same_design(const Blueprint& other) const { return canonical() == other.canonical(); }

  nlohmann::json to_json() const;
  /// vcpus_per_node may be omitted when a pricing catalog is supplied.
  static Blueprint from_json(const nlohmann::json& doc, const PricingCatalog* pricing = nullptr);
};

enum class ChangeKind { InstanceChange, ElasticResize, ClassicResize, Pause, Unpause, ReplicaRemove };

std::string_view to_string(ChangeKind k) noexcept;

struct TableMove {
  std::string table;
  EngineId source = EngineId::RowStore;
  EngineId dest = EngineId::RowStore;
  double bytes = 0.0;

  bool operator==(const TableMove&) const = default;
};

struct ProvisioningChange {
  EngineId engine = EngineId::RowStore;
  Provisioning from;
  Provisioning to;
  ChangeKind kind = ChangeKind::InstanceChange;
  int instance_changes = 0; // RowStore instances launched or replaced

  bool operator==(const ProvisioningChange&) const = default;
};

struct TransitionPlan {
  std::vector<TableMove> table_moves;
  std::vector<ProvisioningChange> provisioning_changes;

  bool empty() const noexcept { return table_moves.empty() && provisioning_changes.empty(); }
  bool has(ChangeKind k) const;
  nlohmann::json to_json() const;
};

struct Violation {
  std::string rule;
  std::string detail;
};
using ValidationReport = std::vector<Violation>;

/// Empty report iff the blueprint is valid. Assignment coverage is only
/// checked for queries present in `workload`.
ValidationReport validate_blueprint(const Blueprint& bp, const DatasetCatalog& catalog,
                                    std::span<const WorkloadQuery> workload = {});

bool has_violation(const ValidationReport& report, std::string_view rule);

/// Classifies one engine's provisioning change; nullopt when nothing
/// billable changes. ScanService never changes.
std::optional<ProvisioningChange> classify_change(EngineId e, const Provisioning& from,
                                                  const Provisioning& to);

TransitionPlan diff_blueprints(const Blueprint& current, const Blueprint& candidate,
                               const DatasetCatalog& catalog);

/// Capability keyword -> engines that support it.
struct CapabilityConfig {
  std::map<std::string, EngineSet> keywords;

  std::vector<std::string> keyword_list() const;
  /// Engines supporting every token; unknown tokens do not restrict.
  EngineSet supporting(std::span<const std::string> tokens) const;

  static CapabilityConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Serving engines holding every referenced table and supporting every
/// detected capability. Throws EmptyEligibleSet when none qualifies.
EngineSet eligible_engines(const LogicalQuery& q, const Blueprint& bp, const CapabilityConfig& caps);

} // namespace blueprintd

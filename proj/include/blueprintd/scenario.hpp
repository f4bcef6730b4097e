#pragma once

#include "blueprintd/blueprint.hpp"
#include "blueprintd/catalog.hpp"
#include "blueprintd/comparator.hpp"
#include "blueprintd/ground_truth.hpp"
#include "blueprintd/predictor.hpp"
#include "blueprintd/pricing.hpp"
#include "blueprintd/router.hpp"
#include "blueprintd/scoring.hpp"
#include "blueprintd/workload.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace blueprintd {

struct TriggerConfig {
  double cpu_high = 0.85;
  double cpu_low = 0.15;
  double sustain_s = 600.0;
  double latency_sustain_s = 600.0;
  double recheck_after_change_s = 3600.0;

  nlohmann::json to_json() const;
  static TriggerConfig from_json(const nlohmann::json& doc);
};

struct PlanningConfig {
  std::size_t beam_width = 100;
  int radius = 1;
  int max_nodes = 64;
  double window_s = 3600.0;      // planning window of logged queries
  double load_window_s = 600.0;  // recent window for utilization and p90
  ScoringConfig scoring;
  RoutingForestConfig forest;
  PredictorKind predictor = PredictorKind::Oracle;
  NoiseConfig noise;
};

struct Phase {
  double start_s = 0.0;
  double txn_clients = 0.0;
  std::vector<WorkloadQuery> queries;
};

struct TxnConfig {
  double rate_per_client_per_s = 1.0;
  double cpu_s_per_txn = 0.005; // RowStore CPU seconds at base vCPUs
};

struct FailoverConfig {
  double multiplier = 10.0;
  double duration_s = 60.0;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 1;
  double duration_s = 3600.0;
  double metrics_interval_s = 60.0;
  DatasetCatalog catalog;
  PricingCatalog pricing;
  CapabilityConfig caps;
  Blueprint initial;
  SloConfig slo;
  TriggerConfig triggers;
  PlanningConfig planning;
  GroundTruthParams truth;
  TxnConfig txn;
  FailoverConfig failover;
  std::vector<Phase> phases; // sorted by start_s, first at 0

  const Phase& phase_at(double t) const;

  /// `base_dir` resolves relative catalog, pricing and workload paths.
  static ScenarioConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
  static ScenarioConfig load(const std::filesystem::path& path);
};

nlohmann::json load_json_file(const std::filesystem::path& path);

} // namespace blueprintd

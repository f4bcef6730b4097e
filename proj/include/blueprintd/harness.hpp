#pragma once

#include "blueprintd/ground_truth.hpp"
#include "blueprintd/scenario.hpp"
#include "blueprintd/search.hpp"
#include "blueprintd/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <vector>

namespace blueprintd {

/// Instance prices and transfer rates used by the shipped scenarios and the
/// generated search instances.
PricingCatalog reference_pricing();

/// A self-contained planning problem: scorer inputs plus the provisionings
/// to search.
struct SearchInstance {
  DatasetCatalog catalog;
  PricingCatalog pricing;
  CapabilityConfig caps;
  Blueprint current;
  WorkloadWindow window;
  std::vector<QueryPrediction> predictions;
  EngineModels models;
  LoadState load;
  ScoringConfig scoring;
  Objective objective;
  std::vector<ProvisioningSet> provisionings;
};

/// Random instance with `n_queries` queries over three engines. The
/// provisioning list is trimmed so exhaustive search stays within its guard.
SearchInstance generate_search_instance(std::uint64_t seed, std::size_t n_queries);

/// Instance from a planning snapshot, its workload replaced by `queries`
/// (truncated to `max_queries`).
SearchInstance search_instance_from_snapshot(const ScenarioConfig& scenario, const PlanningSnapshot& snap,
                                             std::vector<WorkloadQuery> queries, std::size_t max_queries,
                                             const RuntimePredictor& predictor);

struct SearchComparison {
  double beam_w = 0.0;
  double exhaustive_w = 0.0;
  double greedy_w = 0.0;
  double random_w = 0.0;
  std::size_t beam_scored = 0;
  std::size_t exhaustive_scored = 0;
  std::size_t query_count = 0;
  std::size_t provisioning_count = 0;

  nlohmann::json to_json() const;
};

/// Beam (best over the instance's provisionings) against exhaustive, naive
/// greedy and best-of-random. `random_samples` is per provisioning.
SearchComparison compare_search(const SearchInstance& inst, std::size_t beam_width = 100,
                                std::size_t random_samples = 10000, std::uint64_t seed = 1);

struct SensitivityCell {
  double fraction = 0.0;
  double error = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t blueprint_hash = 0;
  bool unchanged = false;
  bool feasible = true;
  double w = 0.0;
};

struct SensitivityReport {
  std::uint64_t baseline_hash = 0;
  double baseline_w = 0.0;
  double snapshot_t = 0.0;
  std::vector<SensitivityCell> cells;

  nlohmann::json to_json() const;
};

/// Plans the scenario's first trigger snapshot under NoisyOracle predictions
/// for every (fraction, error, seed) and compares with the oracle selection.
SensitivityReport run_sensitivity(const ScenarioConfig& scenario, std::span<const double> fractions,
                                  std::span<const double> errors, std::size_t seeds);

/// Catalog whose tables favour different engines depending on filter
/// selectivity, so the best engine is a function of the routing features.
DatasetCatalog router_catalog();

/// `n` random single-table and join queries over router_catalog().
std::vector<WorkloadQuery> generate_router_workload(std::size_t n, std::uint64_t seed);

struct RouterEvaluation {
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double forest_slowdown = 0.0;
  double random_slowdown = 0.0;
  double best_single_slowdown = 0.0;
  EngineId best_single_engine = EngineId::RowStore;
  std::size_t max_nodes_visited = 0; // per query, summed over trees
  std::size_t node_budget = 0;       // n_trees * max_depth

  nlohmann::json to_json() const;
};

/// Trains on the first half of the workload and evaluates on the rest
/// against ground-truth run times.
RouterEvaluation evaluate_router(std::size_t n_queries, std::uint64_t seed, const GroundTruthParams& truth,
                                 const RoutingForestConfig& cfg = {});

} // namespace blueprintd

#pragma once

#include "blueprintd/comparator.hpp"
#include "blueprintd/scoring.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace blueprintd {

/// Instance types per engine in size order, plus node-count bounds.
struct ProvisioningLattice {
  std::array<std::vector<InstanceType>, kEngineCount> instance_types;
  int min_nodes = 1;
  int max_nodes = 64;
  int radius = 1;

  static ProvisioningLattice from_pricing(const PricingCatalog& pricing, int radius = 1, int max_nodes = 64);
  /// Provisioning at (instance index, nodes) for an engine.
  Provisioning at(EngineId e, std::size_t index, int nodes) const;
};

/// Options for one engine within `radius` steps. One step moves the instance
/// index by one, halves or doubles the node count, or pauses; a paused
/// engine may resume at the smallest or its current instance type.
std::vector<Provisioning> engine_neighbors(const Provisioning& current, const ProvisioningLattice& lattice);

/// Cartesian product of engine_neighbors in engine order.
std::vector<ProvisioningSet> enumerate_neighbor_provisionings(const ProvisioningSet& current,
                                                              const ProvisioningLattice& lattice);

/// Rate descending, then max/min predicted run time ratio descending, then
/// query id.
std::vector<std::size_t> order_queries(const WorkloadWindow& w, std::span<const QueryPrediction> predictions);

/// Search objective: comparator inputs.
struct Objective {
  SloConfig slo;
  CurrentMetrics metrics;
};

struct SearchResult {
  Candidate candidate;
  VectorScore score;
  double w = 0.0;
  std::size_t candidates_scored = 0;

  RankKey key(const Objective& obj) const { return rank_key(score, obj.metrics, obj.slo); }
};

/// Greedy beam search over assignments for one provisioning. Returns nullopt
/// when no child survives validity (e.g. RowStore is not serving).
std::optional<SearchResult> beam_search(const CandidateScorer& scorer, const ProvisioningSet& provisionings,
                                        const Objective& obj, std::size_t beam_width,
                                        std::span<const std::size_t> order);

inline constexpr double kExhaustiveLimit = 1e7;

/// Every assignment of every provisioning; throws SearchSpaceTooLarge past
/// the limit.
SearchResult exhaustive_search(const CandidateScorer& scorer, std::span<const ProvisioningSet> provisionings,
                               const Objective& obj);

/// Each query on its eligible engine with the smallest predicted run time.
SearchResult naive_greedy(const CandidateScorer& scorer, std::span<const ProvisioningSet> provisionings,
                          const Objective& obj);

/// Best of uniformly sampled eligible assignments per provisioning.
SearchResult random_search(const CandidateScorer& scorer, std::span<const ProvisioningSet> provisionings,
                           const Objective& obj, std::size_t samples, std::uint64_t seed);

struct PlanConfig {
  std::size_t beam_width = 100;
  int radius = 1;
  int max_nodes = 64;
};

struct PlanResult {
  Blueprint blueprint;
  VectorScore score;
  double w = 0.0;
  bool kept_current = false;
  std::size_t provisionings_considered = 0;
  std::size_t candidates_scored = 0;
  double current_w = 0.0;

  nlohmann::json to_json() const;
};

/// Best blueprint over all neighbour provisionings. The current blueprint
/// competes when it assigns every workload query, and wins exact ties on
/// (W, T_T, C). Throws NoFeasibleBlueprint when every candidate scores +inf.
PlanResult plan(const CandidateScorer& scorer, const Blueprint& current, const Objective& obj,
                const PlanConfig& cfg);

} // namespace blueprintd

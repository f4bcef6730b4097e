#pragma once

#include "blueprintd/blueprint.hpp"
#include "blueprintd/catalog.hpp"
#include "blueprintd/fitting.hpp"
#include "blueprintd/predictor.hpp"
#include "blueprintd/pricing.hpp"
#include "blueprintd/workload.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blueprintd {

inline constexpr double kOverloadEpsilon = 0.02;

/// (c1 * base / d + c2) * G. Requires d >= 1.
double adjust_for_provisioning(double base_runtime_s, const ProvisioningConstants& c, int dest_vcpus);

/// p-th percentile M/M/1 wait: -K / (1 - rho) * ln((1 - p) / rho), clamped
/// to 0 for rho <= 1 - p. Throws UtilizationOutOfRange for rho >= 1 - epsilon.
double queueing_delay(double utilization, double mean_processing_s, double percentile,
                      double epsilon = kOverloadEpsilon);

/// rho * candidate/observed, or fallback * candidate when nothing was
/// observed; clamped to [0, 1].
double adjust_utilization(double measured, double candidate_sum_s, double observed_sum_s,
                          double fallback_constant);

/// a / (M - rho) + b. Throws Saturated for rho >= M.
double txn_latency(double utilization, const TxnModelConstants& c);

/// rho * (current / candidate vCPUs) * load factor, clamped to [0, 1].
double adjust_txn_utilization(double utilization, int current_vcpus, int candidate_vcpus,
                              double query_load_factor);

struct EngineModels {
  std::array<ProvisioningConstants, kEngineCount> provisioning{};
  TxnModelConstants txn;

  nlohmann::json to_json() const;
  static EngineModels from_json(const nlohmann::json& doc);
};

struct EngineLoad {
  double utilization = 0.0;              // measured CPU busy fraction
  double observed_runtime_s_per_hour = 0.0; // routed query run time, per hour
  double mean_processing_s = 0.0;
};

struct LoadState {
  std::array<EngineLoad, kEngineCount> engines{};
  /// RowStore CPU seconds per hour spent on transactions.
  double txn_work_s_per_hour = 0.0;

  nlohmann::json to_json() const;
};

struct ScoringConfig {
  double percentile = 0.9;
  double fallback_constant = 0.001;
  double overload_epsilon = kOverloadEpsilon;
};

struct VectorScore {
  std::vector<double> query_latencies; // per workload query; 0 when unassigned
  std::vector<double> query_weights;   // arrival rate; 0 when unassigned
  std::shared_ptr<const std::vector<std::string>> query_tags;
  double txn_latency = 0.0;
  double operating_cost = 0.0; // $/hour
  double transition_time_s = 0.0;
  double transition_cost = 0.0; // $
  std::uint64_t blueprint_hash = 0;

  nlohmann::json to_json() const;
};

/// Node, scan and storage cost in $/hour. `bytes_scanned` is aligned with
/// the workload; queries without an assignment are ignored.
double operating_cost(const Blueprint& bp, const WorkloadWindow& w, const PricingCatalog& pricing,
                      const DatasetCatalog& catalog, std::span<const double> bytes_scanned);

struct TransitionEstimate {
  double time_s = 0.0;
  double cost = 0.0;
};

/// Serial time of one provisioning change on its engine.
double change_duration_s(const ProvisioningChange& change, const PricingCatalog& pricing,
                         double warehouse_data_bytes);

/// Time is the maximum over engines of that engine's serial work; table
/// moves count against the destination engine.
TransitionEstimate transition_time_cost(const TransitionPlan& plan, const PricingCatalog& pricing,
                                        double warehouse_data_bytes);

/// Bytes of tables placed on the Warehouse.
double warehouse_data_bytes(const Blueprint& bp, const DatasetCatalog& catalog);

struct ScoringInputs {
  const DatasetCatalog& catalog;
  const PricingCatalog& pricing;
  const CapabilityConfig& caps;
  EngineModels models;
  LoadState load;
  ScoringConfig config;
};

/// Provisioning choice plus one engine per workload query (-1: unassigned).
struct Candidate {
  ProvisioningSet provisionings{};
  std::vector<std::int8_t> assignment;
};

/// Scores candidates against a fixed current blueprint and workload.
/// Placement of a candidate is derived: every table on RowStore (writer and
/// universal engine) plus the engines of assigned queries that touch it.
class CandidateScorer {
public:
  /// Per-provisioning quantities shared by every assignment.
  struct Prepared {
    ProvisioningSet provisionings{};
    std::array<double, kEngineCount> runtime_factor{}; // P(G) / G
    std::array<double, kEngineCount> change_time_s{};
    std::array<bool, kEngineCount> serving{};
    double node_cost = 0.0;
    std::uint64_t hash_seed = 0;
    std::vector<std::uint8_t> eligible; // per query: engine bitmask
  };

  CandidateScorer(const Blueprint& current, const WorkloadWindow& workload,
                  std::span<const QueryPrediction> predictions, const ScoringInputs& inputs);

  std::size_t query_count() const noexcept { return queries_.size(); }
  const WorkloadWindow& workload() const noexcept { return workload_; }
  const ProvisioningSet& current_provisionings() const noexcept { return current_prov_; }
  const ScoringInputs& inputs() const noexcept { return inputs_; }
  std::span<const QueryPrediction> predictions() const noexcept { return predictions_; }

  /// Throws UnknownPrice for instance types missing from the catalog.
  Prepared prepare(const ProvisioningSet& provisionings) const;

  /// `out` is reused to avoid allocation in search loops.
  void score(const Prepared& prep, std::span<const std::int8_t> assignment, VectorScore& out) const;
  VectorScore score(const Candidate& c) const;

  /// Scores with an explicit placement (per catalog table, engine bitmask)
  /// instead of the derived one.
  VectorScore score_with_placement(const Candidate& c, std::span<const std::uint8_t> placement) const;

  std::vector<std::uint8_t> derive_placement(std::span<const std::int8_t> assignment) const;
  Blueprint materialize(const Candidate& c) const;
  Candidate candidate_from(const Blueprint& bp) const;
  std::vector<std::uint8_t> placement_masks(const Blueprint& bp) const;

private:
  struct QueryInfo {
    std::vector<std::uint16_t> tables;
    double rate = 0.0;
    std::array<double, kEngineCount> runtime{};
    double bytes = 0.0;
    std::uint8_t capability_mask = 0x7;
  };
  struct TableInfo {
    double bytes = 0.0;
    double rows = 0.0;
    std::array<double, kEngineCount> storage_cost{}; // $/hour if placed
    std::array<double, kEngineCount> move_time_s{};  // writer -> engine
    std::uint8_t current_mask = 0;
  };

  void score_impl(const Prepared& prep, std::span<const std::int8_t> assignment,
                  std::span<const std::uint8_t> placement, VectorScore& out) const;

  const WorkloadWindow& workload_;
  std::span<const QueryPrediction> predictions_;
  const ScoringInputs& inputs_;
  ProvisioningSet current_prov_{};
  std::vector<QueryInfo> queries_;
  std::vector<TableInfo> tables_;
  std::shared_ptr<const std::vector<std::string>> tags_;
  double current_warehouse_bytes_ = 0.0;
  std::array<int, kEngineCount> current_vcpus_{};
};

/// Full score of a candidate blueprint against the current one.
VectorScore score_blueprint(const Blueprint& candidate, const Blueprint& current,
                            const WorkloadWindow& w, std::span<const QueryPrediction> predictions,
                            const ScoringInputs& inputs);

/// Engine provisionings of a blueprint; missing engines become node_count 0.
ProvisioningSet provisioning_set(const Blueprint& bp);

} // namespace blueprintd

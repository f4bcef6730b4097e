#pragma once

#include "blueprintd/blueprint.hpp"
#include "blueprintd/comparator.hpp"
#include "blueprintd/ground_truth.hpp"
#include "blueprintd/scenario.hpp"
#include "blueprintd/scoring.hpp"
#include "blueprintd/search.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blueprintd {

/// One metrics interval ending at `t`. CPU is NaN for engines that are not
/// serving and for the serverless engine; query p90 is NaN without
/// completions.
struct MetricRecord {
  double t = 0.0;
  double span_s = 0.0;
  std::array<double, kEngineCount> cpu{};
  double txn_utilization = 0.0; // mean RowStore busy fraction from transactions
  double txn_p90_s = 0.0;
  double query_p90_s = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> class_p90_s;
  double cost_per_hour = 0.0;
  std::size_t arrivals = 0;
  std::size_t completed = 0;
};

/// True when every observed p90 of the record is within its SLO.
bool slo_compliant(const MetricRecord& r, const SloConfig& slo);

struct SimEvent {
  double t = 0.0;
  std::string kind;
  nlohmann::json detail;
};

struct MetricsLog {
  std::vector<MetricRecord> records; // timestamps nondecreasing
  std::vector<SimEvent> events;
  nlohmann::json summary;

  /// Long format: timestamp,metric,value. NaN values are omitted.
  std::string to_csv() const;
  nlohmann::json events_json() const;
};

enum class TriggerCause { TxnLatency, QueryLatency, CpuHigh, CpuLow, Recheck };

std::string_view to_string(TriggerCause c) noexcept;

struct TriggerFired {
  TriggerCause cause = TriggerCause::Recheck;
  std::optional<EngineId> engine; // CPU triggers only
  double t = 0.0;
};

struct TriggerState {
  std::optional<double> last_change_at;
  bool recheck_fired = false;
};

/// `window` holds the records since the last plan or activation. A condition
/// is sustained when the trailing records satisfying it span at least the
/// configured duration. Priority: transaction latency, query latency, CPU
/// high, CPU low, recheck.
std::optional<TriggerFired> evaluate_triggers(std::span<const MetricRecord> window, const TriggerConfig& cfg,
                                              const SloConfig& slo, double now, const TriggerState& state);

/// Everything the planner sees at a trigger.
struct PlanningSnapshot {
  double t = 0.0;
  TriggerCause cause = TriggerCause::Recheck;
  Blueprint current;
  WorkloadWindow window;
  LoadState load;
  CurrentMetrics metrics;
  EngineModels models;

  nlohmann::json to_json() const;
};

std::unique_ptr<RuntimePredictor> make_predictor(const PlanningConfig& cfg,
                                                 std::shared_ptr<const GroundTruthSource> truth);

PlanResult plan_from_snapshot(const PlanningSnapshot& snap, const ScenarioConfig& scenario,
                              const RuntimePredictor& predictor);

/// Constants fitted from ground-truth measurements at several vCPU counts and
/// utilizations, as the planner would from profiling runs.
EngineModels bootstrap_models(const EngineGroundTruth& truth, std::span<const WorkloadQuery> sample);

struct PendingTransition {
  Blueprint target;
  TransitionPlan plan;
  TransitionEstimate estimate;
  double started_at = 0.0;
  double completes_at = 0.0;
};

struct SimState {
  double clock = 0.0;
  Blueprint active;
  std::optional<PendingTransition> pending;
  std::optional<double> spike_until; // failover spike end
  std::size_t change_count = 0;
};

/// Starts a transition; activates immediately when the estimate is zero.
/// Returns true on immediate activation. Throws TransitionInFlight.
bool apply_transition(SimState& state, Blueprint target, TransitionPlan plan, TransitionEstimate est,
                      const FailoverConfig& failover);

/// Activates the pending transition when due. Returns true on activation.
bool complete_transition(SimState& state, const FailoverConfig& failover);

struct RunOptions {
  bool stop_at_first_trigger = false;
  std::shared_ptr<const RuntimePredictor> predictor; // overrides the scenario predictor
};

struct RunResult {
  MetricsLog log;
  std::vector<PlanningSnapshot> snapshots;
  Blueprint final_blueprint;
};

/// Deterministic per scenario seed. Throws ConfigError.
RunResult run_scenario(const ScenarioConfig& scenario, const RunOptions& options = {});

} // namespace blueprintd

#pragma once

#include "blueprintd/scoring.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace blueprintd {

struct SloClass {
  std::string tag;
  double query_p90_s = 0.0;
};

struct SloConfig {
  double txn_p90_s = 0.03;
  double query_p90_s = 30.0;
  double gamma = 2.0;
  double benefit_period_hours = 1.0;
  double percentile = 0.9;
  std::vector<SloClass> classes;

  double benefit_period_s() const { return benefit_period_hours * 3600.0; }
  const SloClass* class_for(const std::string& tag) const;

  nlohmann::json to_json() const;
  static SloConfig from_json(const nlohmann::json& doc);
};

/// Measurements on the current blueprint.
struct CurrentMetrics {
  double txn_p90_s = 0.0;
  double query_p90_s = 0.0;
  double cost_per_hour = 0.0; // C0
  std::map<std::string, double> class_p90_s;

  nlohmann::json to_json() const;
};

/// 1 + max(t / t_slo, q / q_slo, class ratios).
double penalty(const CurrentMetrics& m, const SloConfig& slo);

struct PredictedPercentiles {
  double query = 0.0; // 0 when no query is assigned
  double txn = 0.0;
  std::map<std::string, double> per_class;
  bool any_infinite_query = false;
};

PredictedPercentiles predicted_percentiles(const VectorScore& s, const SloConfig& slo);

bool feasible(const VectorScore& s, const SloConfig& slo);

/// P^gamma * C0 * T_T + C_T + C * T_B in dollars; +inf when any predicted
/// p90 misses its SLO or any assigned query is overloaded.
double scalarize(const VectorScore& s, const CurrentMetrics& m, const SloConfig& slo);

/// A scalarized score with the tie-break keys.
struct RankKey {
  double w = 0.0;
  double transition_time_s = 0.0;
  double operating_cost = 0.0;
  std::uint64_t hash = 0;

  auto operator<=>(const RankKey&) const = default;
};

RankKey rank_key(const VectorScore& s, const CurrentMetrics& m, const SloConfig& slo);

/// Negative when s1 ranks first, positive when s2 does, zero only for
/// identical keys.
int compare(const VectorScore& s1, const VectorScore& s2, const CurrentMetrics& m, const SloConfig& slo);

} // namespace blueprintd

#include "blueprintd/comparator.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blueprintd {

const SloClass* SloConfig::class_for(const std::string& tag) const {
  for (const auto& c : classes) {
    if (c.tag == tag) return &c;
  }
  return nullptr;
}

nlohmann::json SloConfig::to_json() const {
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : classes) cls.push_back({{"tag", c.tag}, {"query_p90_s", c.query_p90_s}});
  return {{"txn_p90_s", txn_p90_s},
          {"query_p90_s", query_p90_s},
          {"gamma", gamma},
          {"benefit_period_hours", benefit_period_hours},
          {"classes", cls}};
}

SloConfig SloConfig::from_json(const nlohmann::json& doc) {
  SloConfig s;
  try {
    s.txn_p90_s = doc.at("txn_p90_s").get<double>();
    s.query_p90_s = doc.at("query_p90_s").get<double>();
    s.gamma = doc.value("gamma", 2.0);
    s.benefit_period_hours = doc.value("benefit_period_hours", 1.0);
    if (doc.contains("classes")) {
      for (const auto& c : doc.at("classes")) {
        s.classes.push_back({c.at("tag").get<std::string>(), c.at("query_p90_s").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("slo: ") + e.what());
  }
  const bool positive = s.txn_p90_s > 0.0 && s.query_p90_s > 0.0 && s.gamma > 0.0 && s.benefit_period_hours > 0.0 &&
                        std::all_of(s.classes.begin(), s.classes.end(), [](const auto& c) { return c.query_p90_s > 0.0; });
  if (!positive) throw ConfigError("slo values must be positive");
  return s;
}

nlohmann::json CurrentMetrics::to_json() const {
  nlohmann::json j = {{"txn_p90_s", txn_p90_s}, {"query_p90_s", query_p90_s}, {"cost_per_hour", cost_per_hour}};
  for (const auto& [tag, v] : class_p90_s) j["classes"][tag] = v;
  return j;
}

double penalty(const CurrentMetrics& m, const SloConfig& slo) {
  double ratio = std::max(m.txn_p90_s / slo.txn_p90_s, m.query_p90_s / slo.query_p90_s);
  for (const auto& c : slo.classes) {
    if (auto it = m.class_p90_s.find(c.tag); it != m.class_p90_s.end()) {
      ratio = std::max(ratio, it->second / c.query_p90_s);
    }
  }
  return 1.0 + ratio;
}

PredictedPercentiles predicted_percentiles(const VectorScore& s, const SloConfig& slo) {
  PredictedPercentiles out;
  out.txn = s.txn_latency;
  double total = 0.0;
  for (std::size_t i = 0; i < s.query_weights.size(); ++i) {
    if (s.query_weights[i] <= 0.0) continue;
    total += s.query_weights[i];
    if (!std::isfinite(s.query_latencies[i])) out.any_infinite_query = true;
  }
  if (total > 0.0) out.query = percentile(s.query_latencies, s.query_weights, slo.percentile);
  if (!slo.classes.empty() && s.query_tags) {
    thread_local std::vector<double> weights;
    for (const auto& c : slo.classes) {
      weights.assign(s.query_weights.size(), 0.0);
      bool any = false;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        if ((*s.query_tags)[i] == c.tag && s.query_weights[i] > 0.0) {
          weights[i] = s.query_weights[i];
          any = true;
        }
      }
      if (any) out.per_class[c.tag] = percentile(s.query_latencies, weights, slo.percentile);
    }
  }
  return out;
}

bool feasible(const VectorScore& s, const SloConfig& slo) {
  const auto p = predicted_percentiles(s, slo);
  if (p.any_infinite_query || !(p.txn <= slo.txn_p90_s) || !(p.query <= slo.query_p90_s)) return false;
  for (const auto& c : slo.classes) {
    if (auto it = p.per_class.find(c.tag); it != p.per_class.end() && !(it->second <= c.query_p90_s)) return false;
  }
  return true;
}

double scalarize(const VectorScore& s, const CurrentMetrics& m, const SloConfig& slo) {
  if (!feasible(s, slo)) return std::numeric_limits<double>::infinity();
  const double p = penalty(m, slo);
  return std::pow(p, slo.gamma) * m.cost_per_hour * (s.transition_time_s / 3600.0) + s.transition_cost +
         s.operating_cost * slo.benefit_period_hours;
}

RankKey rank_key(const VectorScore& s, const CurrentMetrics& m, const SloConfig& slo) {
  return {scalarize(s, m, slo), s.transition_time_s, s.operating_cost, s.blueprint_hash};
}

int compare(const VectorScore& s1, const VectorScore& s2, const CurrentMetrics& m, const SloConfig& slo) {
  const auto k1 = rank_key(s1, m, slo);
  const auto k2 = rank_key(s2, m, slo);
  if (k1 < k2) return -1;
  if (k2 < k1) return 1;
  return 0;
}

} // namespace blueprintd

#include "blueprintd/scenario.hpp"

#include "blueprintd/errors.hpp"

#include <algorithm>
#include <fstream>

namespace blueprintd {

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json TriggerConfig::to_json() const {
  return {{"cpu_high", cpu_high},
          {"cpu_low", cpu_low},
          {"sustain_s", sustain_s},
          {"latency_sustain_s", latency_sustain_s},
          {"recheck_after_change_s", recheck_after_change_s}};
}

TriggerConfig TriggerConfig::from_json(const nlohmann::json& doc) {
  TriggerConfig t;
  try {
    t.cpu_high = doc.value("cpu_high", t.cpu_high);
    t.cpu_low = doc.value("cpu_low", t.cpu_low);
    t.sustain_s = doc.value("sustain_s", t.sustain_s);
    t.latency_sustain_s = doc.value("latency_sustain_s", t.latency_sustain_s);
    t.recheck_after_change_s = doc.value("recheck_after_change_s", t.recheck_after_change_s);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("triggers: ") + e.what());
  }
  if (!(0.0 <= t.cpu_low && t.cpu_low < t.cpu_high && t.cpu_high <= 1.0)) {
    throw ConfigError("triggers: need 0 <= cpu_low < cpu_high <= 1");
  }
  if (!(t.sustain_s > 0.0 && t.latency_sustain_s > 0.0 && t.recheck_after_change_s > 0.0)) {
    throw ConfigError("triggers: durations must be positive");
  }
  return t;
}

const Phase& ScenarioConfig::phase_at(double t) const {
  auto it = std::upper_bound(phases.begin(), phases.end(), t,
                             [](double v, const Phase& p) { return v < p.start_s; });
  return it == phases.begin() ? phases.front() : *std::prev(it);
}

namespace {

nlohmann::json inline_or_file(const nlohmann::json& v, const std::filesystem::path& base_dir) {
  if (v.is_string()) return load_json_file(base_dir / v.get<std::string>());
  return v;
}

PlanningConfig planning_from_json(const nlohmann::json& doc) {
  PlanningConfig p;
  p.beam_width = doc.value("beam_width", p.beam_width);
  p.radius = doc.value("radius", p.radius);
  p.max_nodes = doc.value("max_nodes", p.max_nodes);
  p.window_s = doc.value("window_s", p.window_s);
  p.load_window_s = doc.value("load_window_s", p.load_window_s);
  p.scoring.percentile = doc.value("percentile", p.scoring.percentile);
  p.scoring.fallback_constant = doc.value("fallback_constant", p.scoring.fallback_constant);
  p.scoring.overload_epsilon = doc.value("overload_epsilon", p.scoring.overload_epsilon);
  const auto kind = doc.value("predictor", std::string("oracle"));
  if (kind == "oracle") {
    p.predictor = PredictorKind::Oracle;
  } else if (kind == "noisy_oracle") {
    p.predictor = PredictorKind::NoisyOracle;
  } else {
    throw ConfigError("planning: unsupported predictor '" + kind + "'");
  }
  if (doc.contains("noise")) {
    const auto& n = doc.at("noise");
    p.noise.fraction = n.value("fraction", 0.0);
    p.noise.error = n.value("error", 0.0);
    p.noise.seed = n.value("seed", std::uint64_t{0});
  }
  if (doc.contains("forest")) {
    const auto& f = doc.at("forest");
    p.forest.n_trees = f.value("n_trees", p.forest.n_trees);
    p.forest.max_depth = f.value("max_depth", p.forest.max_depth);
    p.forest.bootstrap_fraction = f.value("bootstrap_fraction", p.forest.bootstrap_fraction);
    p.forest.seed = f.value("seed", p.forest.seed);
  }
  if (p.beam_width == 0 || p.radius < 1 || p.max_nodes < 1 || !(p.window_s > 0.0) || !(p.load_window_s > 0.0)) {
    throw ConfigError("planning: parameters out of range");
  }
  if (!(p.scoring.percentile > 0.0 && p.scoring.percentile < 1.0) || !(p.scoring.fallback_constant >= 0.0)) {
    throw ConfigError("planning: percentile must lie in (0, 1)");
  }
  if (!(p.noise.fraction >= 0.0 && p.noise.fraction <= 1.0) || !(p.noise.error > -1.0)) {
    throw ConfigError("planning: noise out of range");
  }
  return p;
}

std::vector<WorkloadQuery> phase_queries(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                         const std::vector<std::string>& keywords) {
  std::vector<WorkloadQuery> out;
  if (doc.contains("workload")) {
    out = load_workload_jsonl(base_dir / doc.at("workload").get<std::string>(), keywords);
  }
  if (doc.contains("queries")) {
    for (const auto& jq : doc.at("queries")) {
      out.push_back(make_workload_query(jq.at("sql").get<std::string>(), jq.at("arrival_rate_per_hour").get<double>(),
                                        jq.value("query_id", std::string{}), jq.value("tag", std::string{}),
                                        keywords));
    }
  }
  for (const auto& q : out) {
    if (!(q.arrival_rate_per_hour >= 0.0)) throw ConfigError("negative arrival rate for " + q.query_id);
  }
  return out;
}

} // namespace

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  ScenarioConfig s;
  try {
    s.name = doc.value("name", std::string("scenario"));
    s.seed = doc.value("seed", s.seed);
    s.duration_s = doc.at("duration_s").get<double>();
    s.metrics_interval_s = doc.value("metrics_interval_s", s.metrics_interval_s);
    s.catalog = DatasetCatalog::from_json(inline_or_file(doc.at("catalog"), base_dir));
    s.pricing = PricingCatalog::from_json(inline_or_file(doc.at("pricing"), base_dir));
    if (doc.contains("capabilities")) s.caps = CapabilityConfig::from_json(doc.at("capabilities"));
    s.slo = SloConfig::from_json(doc.at("slo"));
    if (doc.contains("triggers")) s.triggers = TriggerConfig::from_json(doc.at("triggers"));
    if (doc.contains("planning")) s.planning = planning_from_json(doc.at("planning"));
    s.slo.percentile = s.planning.scoring.percentile;
    if (doc.contains("ground_truth")) s.truth = GroundTruthParams::from_json(doc.at("ground_truth"));
    if (doc.contains("txn")) {
      const auto& t = doc.at("txn");
      s.txn.rate_per_client_per_s = t.value("rate_per_client_per_s", s.txn.rate_per_client_per_s);
      s.txn.cpu_s_per_txn = t.value("cpu_s_per_txn", s.txn.cpu_s_per_txn);
    }
    if (doc.contains("failover")) {
      const auto& f = doc.at("failover");
      s.failover.multiplier = f.value("multiplier", s.failover.multiplier);
      s.failover.duration_s = f.value("duration_s", s.failover.duration_s);
    }
    const auto keywords = s.caps.keyword_list();
    for (const auto& jp : doc.at("phases")) {
      Phase p;
      p.start_s = jp.value("start_s", 0.0);
      p.txn_clients = jp.value("txn_clients", 0.0);
      p.queries = phase_queries(jp, base_dir, keywords);
      s.phases.push_back(std::move(p));
    }
    s.initial = Blueprint::from_json(doc.at("initial_blueprint"), &s.pricing);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }

  if (!(s.duration_s > 0.0) || !(s.metrics_interval_s > 0.0)) throw ConfigError("scenario: durations must be positive");
  if (s.phases.empty()) throw ConfigError("scenario: at least one phase is required");
  std::stable_sort(s.phases.begin(), s.phases.end(), [](const Phase& a, const Phase& b) { return a.start_s < b.start_s; });
  if (s.phases.front().start_s != 0.0) throw ConfigError("scenario: the first phase must start at 0");
  for (const auto& p : s.phases) {
    if (p.txn_clients < 0.0) throw ConfigError("scenario: negative client count");
  }
  if (!(s.txn.rate_per_client_per_s >= 0.0 && s.txn.cpu_s_per_txn >= 0.0)) {
    throw ConfigError("scenario: negative transaction rate");
  }
  if (!(s.failover.multiplier >= 1.0 && s.failover.duration_s >= 0.0)) {
    throw ConfigError("scenario: failover spike out of range");
  }
  std::vector<WorkloadQuery> all;
  for (const auto& p : s.phases) all.insert(all.end(), p.queries.begin(), p.queries.end());
  if (const auto report = validate_blueprint(s.initial, s.catalog, all); !report.empty()) {
    throw ConfigError("scenario: initial blueprint invalid: " + report.front().rule + " (" + report.front().detail + ")");
  }
  return s;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  return from_json(load_json_file(path), path.parent_path());
}

} // namespace blueprintd

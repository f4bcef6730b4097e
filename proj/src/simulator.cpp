#include "blueprintd/simulator.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/fitting.hpp"
#include "blueprintd/hash.hpp"
#include "blueprintd/router.hpp"
#include "blueprintd/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <random>
#include <sstream>

namespace blueprintd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return "inf";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

} // namespace

bool slo_compliant(const MetricRecord& r, const SloConfig& slo) {
  if (r.txn_p90_s > slo.txn_p90_s) return false;
  if (r.query_p90_s > slo.query_p90_s) return false;
  for (const auto& [tag, v] : r.class_p90_s) {
    if (const auto* c = slo.class_for(tag); c && v > c->query_p90_s) return false;
  }
  return true;
}

std::string MetricsLog::to_csv() const {
  std::ostringstream out;
  out << "timestamp,metric,value\n";
  auto row = [&](double t, const std::string& metric, double v) {
    if (std::isnan(v)) return;
    out << format_double(t) << ',' << metric << ',' << format_double(v) << '\n';
  };
  for (const auto& r : records) {
    for (auto e : kAllEngines) row(r.t, "cpu." + std::string(to_string(e)), r.cpu[engine_index(e)]);
    row(r.t, "txn_utilization", r.txn_utilization);
    row(r.t, "txn_p90_s", r.txn_p90_s);
    row(r.t, "query_p90_s", r.query_p90_s);
    for (const auto& [tag, v] : r.class_p90_s) row(r.t, "query_p90_s." + tag, v);
    row(r.t, "cost_per_hour", r.cost_per_hour);
    row(r.t, "arrivals", static_cast<double>(r.arrivals));
    row(r.t, "completed", static_cast<double>(r.completed));
  }
  return out.str();
}

nlohmann::json MetricsLog::events_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : events) out.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  return out;
}

std::string_view to_string(TriggerCause c) noexcept {
  switch (c) {
  case TriggerCause::TxnLatency:
    return "txn_latency";
  case TriggerCause::QueryLatency:
    return "query_latency";
  case TriggerCause::CpuHigh:
    return "cpu_high";
  case TriggerCause::CpuLow:
    return "cpu_low";
  case TriggerCause::Recheck:
    return "recheck";
  }
  return "?";
}

namespace {

template <class Pred>
bool sustained(std::span<const MetricRecord> window, double duration_s, Pred holds) {
  double span = 0.0;
  for (auto it = window.rbegin(); it != window.rend(); ++it) {
    if (!holds(*it)) return false;
    span += it->span_s;
    if (span >= duration_s) return true;
  }
  return false;
}

} // namespace

std::optional<TriggerFired> evaluate_triggers(std::span<const MetricRecord> window, const TriggerConfig& cfg,
                                              const SloConfig& slo, double now, const TriggerState& state) {
  if (sustained(window, cfg.latency_sustain_s, [&](const MetricRecord& r) { return r.txn_p90_s > slo.txn_p90_s; })) {
    return TriggerFired{TriggerCause::TxnLatency, EngineId::RowStore, now};
  }
  const auto query_slow = [&](const MetricRecord& r) {
    if (r.query_p90_s > slo.query_p90_s) return true;
    for (const auto& [tag, v] : r.class_p90_s) {
      if (const auto* c = slo.class_for(tag); c && v > c->query_p90_s) return true;
    }
    return false;
  };
  if (sustained(window, cfg.latency_sustain_s, query_slow)) return TriggerFired{TriggerCause::QueryLatency, {}, now};
  for (auto e : {EngineId::RowStore, EngineId::Warehouse}) {
    const auto i = engine_index(e);
    if (sustained(window, cfg.sustain_s, [&](const MetricRecord& r) { return r.cpu[i] > cfg.cpu_high; })) {
      return TriggerFired{TriggerCause::CpuHigh, e, now};
    }
  }
  for (auto e : {EngineId::RowStore, EngineId::Warehouse}) {
    const auto i = engine_index(e);
    if (sustained(window, cfg.sustain_s, [&](const MetricRecord& r) { return r.cpu[i] < cfg.cpu_low; })) {
      return TriggerFired{TriggerCause::CpuLow, e, now};
    }
  }
  if (state.last_change_at && !state.recheck_fired && now - *state.last_change_at >= cfg.recheck_after_change_s) {
    return TriggerFired{TriggerCause::Recheck, {}, now};
  }
  return std::nullopt;
}

nlohmann::json PlanningSnapshot::to_json() const {
  nlohmann::json queries = nlohmann::json::array();
  for (const auto& q : window.queries) {
    queries.push_back({{"query_id", q.query_id}, {"sql", q.sql}, {"arrival_rate_per_hour", q.arrival_rate_per_hour}});
  }
  return {{"t", t},
          {"cause", std::string(to_string(cause))},
          {"current", current.to_json()},
          {"window", {{"queries", queries}, {"txn_rate_per_s", window.txn_rate_per_s}, {"window_hours", window.window_hours}}},
          {"load", load.to_json()},
          {"metrics", metrics.to_json()},
          {"models", models.to_json()}};
}

std::unique_ptr<RuntimePredictor> make_predictor(const PlanningConfig& cfg,
                                                 std::shared_ptr<const GroundTruthSource> truth) {
  switch (cfg.predictor) {
  case PredictorKind::Oracle:
    return std::make_unique<OraclePredictor>(std::move(truth));
  case PredictorKind::NoisyOracle:
    return std::make_unique<NoisyOraclePredictor>(std::move(truth), cfg.noise);
  case PredictorKind::Table:
    break;
  }
  throw ConfigError("the simulator needs an oracle or noisy oracle predictor");
}

PlanResult plan_from_snapshot(const PlanningSnapshot& snap, const ScenarioConfig& scenario,
                              const RuntimePredictor& predictor) {
  const auto predictions = predict_all(predictor, snap.window.queries);
  const ScoringInputs inputs{scenario.catalog, scenario.pricing, scenario.caps,
                             snap.models,      snap.load,        scenario.planning.scoring};
  const CandidateScorer scorer(snap.current, snap.window, predictions, inputs);
  const Objective obj{scenario.slo, snap.metrics};
  const PlanConfig cfg{scenario.planning.beam_width, scenario.planning.radius, scenario.planning.max_nodes};
  return plan(scorer, snap.current, obj, cfg);
}

EngineModels bootstrap_models(const EngineGroundTruth& truth, std::span<const WorkloadQuery> sample) {
  EngineModels m;
  const auto& params = truth.params();
  for (auto e : {EngineId::RowStore, EngineId::Warehouse}) {
    const int base = params.provisioning[engine_index(e)].base_vcpus;
    std::vector<ProvisioningObservation> obs;
    for (const auto& q : sample) {
      const double g = truth.runtime_s(q.query, e);
      for (int d : {1, 2, 4, 8, 16}) obs.push_back({g, d, truth.runtime_on(q.query, e, d)});
    }
    if (sample.empty()) {
      for (int d : {1, 2, 4, 8, 16}) {
        obs.push_back({1.0, d, adjust_for_provisioning(1.0, params.provisioning[engine_index(e)], d)});
      }
    }
    m.provisioning[engine_index(e)] = fit_provisioning_constants(obs, base);
  }
  m.provisioning[engine_index(EngineId::ScanService)] = ProvisioningConstants{0.0, 1.0, 1, 0.0};
  std::vector<TxnObservation> txn;
  for (double rho : {0.1, 0.3, 0.5, 0.7, 0.9}) txn.push_back({rho, truth.txn_latency_at(rho)});
  m.txn = fit_txn_model(txn);
  return m;
}

namespace {

bool triggers_failover(const TransitionPlan& plan) {
  return std::any_of(plan.provisioning_changes.begin(), plan.provisioning_changes.end(), [](const auto& c) {
    return c.engine == EngineId::RowStore &&
           (c.kind == ChangeKind::InstanceChange || c.kind == ChangeKind::Unpause);
  });
}

void activate(SimState& state, const FailoverConfig& failover) {
  auto& p = *state.pending;
  if (triggers_failover(p.plan)) state.spike_until = state.clock + failover.duration_s;
  if (!state.active.same_design(p.target)) ++state.change_count;
  state.active = std::move(p.target);
  state.pending.reset();
}

} // namespace

bool apply_transition(SimState& state, Blueprint target, TransitionPlan plan, TransitionEstimate est,
                      const FailoverConfig& failover) {
  if (state.pending) throw TransitionInFlight("a transition is already in flight");
  state.pending = PendingTransition{std::move(target), std::move(plan), est, state.clock, state.clock + est.time_s};
  return complete_transition(state, failover);
}

bool complete_transition(SimState& state, const FailoverConfig& failover) {
  if (!state.pending || state.clock < state.pending->completes_at) return false;
  activate(state, failover);
  return true;
}

namespace {

struct Job {
  std::size_t query = 0; // index into the query table
  EngineId engine = EngineId::RowStore;
  double arrival = 0.0;
  double start = 0.0;
  double finish = 0.0;
  double service_s = 0.0;
  double bytes = 0.0;
};

struct Completion {
  double finish;
  std::size_t job;
  bool operator>(const Completion& o) const { return finish != o.finish ? finish > o.finish : job > o.job; }
};

double fixed_cost_per_hour(const Blueprint& bp, const PricingCatalog& pricing, const DatasetCatalog& catalog) {
  double cost = 0.0;
  for (const auto& [e, p] : bp.provisionings) {
    if (bp.engines.contains(e)) cost += pricing.node_cost_per_hour(p);
  }
  for (const auto& [table, engines] : bp.placement.placement) {
    const double rows = catalog.table(table).row_count;
    for (auto e : engines.members()) cost += pricing.storage_rate(e, table) * rows;
  }
  return cost;
}

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

class Simulation {
public:
  Simulation(const ScenarioConfig& sc, const RunOptions& opt)
      : sc_(sc), opt_(opt), truth_(std::make_shared<EngineGroundTruth>(sc.catalog, sc.truth)),
        rng_(mix64(sc.seed)) {
    for (const auto& phase : sc_.phases) {
      std::vector<std::size_t> idx;
      for (const auto& q : phase.queries) {
        auto [it, inserted] = query_index_.try_emplace(q.query_id, queries_.size());
        if (inserted) queries_.push_back(q);
        idx.push_back(it->second);
      }
      phase_queries_.push_back(std::move(idx));
    }
    predictor_ = opt_.predictor;
    if (!predictor_) predictor_ = make_predictor(sc_.planning, truth_);
    models_ = bootstrap_models(*truth_, sc_.phases.front().queries);
    state_.active = sc_.initial;
  }

  RunResult run() {
    event(0.0, "start", {{"blueprint", state_.active.to_json()}, {"models", models_.to_json()}});
    const auto ticks = static_cast<long>(std::ceil(sc_.duration_s));
    interval_start_ = 0.0;
    for (long tick = 0; tick < ticks; ++tick) {
      const double t0 = static_cast<double>(tick);
      state_.clock = t0;
      if (state_.pending && complete_transition(state_, sc_.failover)) on_activation(t0);
      generate_arrivals(t0);
      accumulate_txn(t0);
      const double t1 = t0 + 1.0;
      state_.clock = t1;
      drain_completions(t1);
      const bool interval_end = std::fmod(t1, sc_.metrics_interval_s) == 0.0 || tick + 1 == ticks;
      if (interval_end) close_interval(t1);
      if (!state_.pending && check_triggers(t1) && opt_.stop_at_first_trigger) break;
    }
    return finish();
  }

private:
  void event(double t, std::string kind, nlohmann::json detail) {
    log_.events.push_back({t, std::move(kind), std::move(detail)});
  }

  std::size_t phase_index(double t) const {
    const auto* p = &sc_.phase_at(t);
    return static_cast<std::size_t>(p - sc_.phases.data());
  }

  void generate_arrivals(double t0) {
    const auto pi = phase_index(t0);
    const auto& phase = sc_.phases[pi];
    std::vector<std::pair<double, std::size_t>> arrivals;
    std::uniform_real_distribution<double> offset(0.0, 1.0);
    for (std::size_t k = 0; k < phase.queries.size(); ++k) {
      const double mean = phase.queries[k].arrival_rate_per_hour / 3600.0;
      if (!(mean > 0.0)) continue;
      std::poisson_distribution<int> count(mean);
      const int n = count(rng_);
      for (int i = 0; i < n; ++i) arrivals.emplace_back(t0 + offset(rng_), phase_queries_[pi][k]);
    }
    std::sort(arrivals.begin(), arrivals.end());
    for (const auto& [t, q] : arrivals) dispatch(t, q);
  }

  void dispatch(double t, std::size_t qi) {
    const auto& wq = queries_[qi];
    ++arrivals_;
    ++interval_arrivals_;
    EngineId e{};
    try {
      e = route(wq, state_.active, state_.active.routing.online_policy.get(), sc_.caps, sc_.catalog);
    } catch (const EmptyEligibleSet&) {
      ++rejected_;
      return;
    }
    Job job;
    job.query = qi;
    job.engine = e;
    job.arrival = t;
    const auto* prov = state_.active.provisioning(e);
    job.service_s = truth_->runtime_on(wq.query, e, prov ? prov->total_vcpus() : 1);
    job.bytes = truth_->bytes_scanned(wq.query);
    if (e == EngineId::ScanService) {
      job.start = t;
      interval_scan_bytes_ += job.bytes;
    } else {
      auto& busy = busy_until_[engine_index(e)];
      job.start = std::max(t, busy);
      busy = job.start + job.service_s;
    }
    job.finish = job.start + job.service_s;
    jobs_.push_back(job);
    heap_.push({job.finish, jobs_.size() - 1});
  }

  double txn_utilization_at(double t) const {
    const auto& phase = sc_.phase_at(t);
    const auto* prov = state_.active.provisioning(EngineId::RowStore);
    const int vcpus = prov ? std::max(1, prov->total_vcpus()) : 1;
    const auto& c = truth_->params().provisioning[engine_index(EngineId::RowStore)];
    const double factor = adjust_for_provisioning(1.0, c, vcpus);
    return phase.txn_clients * sc_.txn.rate_per_client_per_s * sc_.txn.cpu_s_per_txn * factor;
  }

  void accumulate_txn(double t0) {
    tick_txn_.push_back(txn_utilization_at(t0));
    tick_spike_.push_back(state_.spike_until && t0 < *state_.spike_until);
  }

  void drain_completions(double now) {
    while (!heap_.empty() && heap_.top().finish <= now) {
      const auto j = heap_.top().job;
      heap_.pop();
      interval_completed_.push_back(j);
      ++completed_;
    }
  }

  double busy_fraction(EngineId e, double t0, double t1) const {
    double busy = 0.0;
    for (auto it = jobs_.rbegin(); it != jobs_.rend(); ++it) {
      if (it->finish <= t0 - 86400.0) break;
      if (it->engine == e) busy += overlap(it->start, it->finish, t0, t1);
    }
    return busy / (t1 - t0);
  }

  void close_interval(double t1) {
    MetricRecord r;
    r.t = t1;
    r.span_s = t1 - interval_start_;
    double txn_u = 0.0;
    for (double u : tick_txn_) txn_u += u;
    r.txn_utilization = tick_txn_.empty() ? 0.0 : txn_u / static_cast<double>(tick_txn_.size());
    for (auto e : kAllEngines) {
      const auto i = engine_index(e);
      if (e == EngineId::ScanService || !state_.active.serving(e)) {
        r.cpu[i] = kNaN;
        continue;
      }
      double u = busy_fraction(e, interval_start_, t1);
      if (e == EngineId::RowStore) u += r.txn_utilization;
      r.cpu[i] = std::min(1.0, u);
    }
    const double base_txn = truth_->txn_latency_at(r.cpu[engine_index(EngineId::RowStore)]);
    std::vector<double> txn;
    txn.reserve(tick_spike_.size());
    for (bool spike : tick_spike_) txn.push_back(spike ? base_txn * sc_.failover.multiplier : base_txn);
    r.txn_p90_s = txn.empty() ? base_txn : percentile(txn, sc_.slo.percentile);

    std::vector<double> lat;
    std::map<std::string, std::vector<double>> by_class;
    for (auto j : interval_completed_) {
      const double l = jobs_[j].finish - jobs_[j].arrival;
      lat.push_back(l);
      const auto& tag = queries_[jobs_[j].query].tag;
      if (!tag.empty()) by_class[tag].push_back(l);
    }
    if (!lat.empty()) r.query_p90_s = percentile(lat, sc_.slo.percentile);
    for (const auto& [tag, v] : by_class) r.class_p90_s[tag] = percentile(v, sc_.slo.percentile);

    r.cost_per_hour = fixed_cost_per_hour(state_.active, sc_.pricing, sc_.catalog) +
                      interval_scan_bytes_ * sc_.pricing.scan_price_per_byte() * 3600.0 / r.span_s;
    r.arrivals = interval_arrivals_;
    r.completed = interval_completed_.size();
    log_.records.push_back(std::move(r));

    interval_start_ = t1;
    tick_txn_.clear();
    tick_spike_.clear();
    interval_completed_.clear();
    interval_scan_bytes_ = 0.0;
    interval_arrivals_ = 0;
  }

  std::span<const MetricRecord> gated_records() const {
    auto it = std::upper_bound(log_.records.begin(), log_.records.end(), gate_,
                               [](double g, const MetricRecord& r) { return g < r.t; });
    // Records straddling the gate are excluded.
    while (it != log_.records.end() && it->t - it->span_s < gate_) ++it;
    return {it, log_.records.end()};
  }

  bool check_triggers(double now) {
    const auto fired = evaluate_triggers(gated_records(), sc_.triggers, sc_.slo, now, trigger_state_);
    if (!fired) return false;
    if (fired->cause == TriggerCause::Recheck) trigger_state_.recheck_fired = true;
    nlohmann::json detail{{"cause", std::string(to_string(fired->cause))}};
    if (fired->engine) detail["engine"] = std::string(to_string(*fired->engine));
    event(now, "trigger", detail);
    auto snap = snapshot(now, fired->cause);
    log_.events.back().detail["window_queries"] = snap.window.queries.size();
    snapshots_.push_back(snap);
    if (opt_.stop_at_first_trigger) return true;
    replan(now, snap);
    gate_ = now;
    return true;
  }

  PlanningSnapshot snapshot(double now, TriggerCause cause) const {
    PlanningSnapshot s;
    s.t = now;
    s.cause = cause;
    s.current = state_.active;
    s.models = models_;

    const double window_start = std::max(0.0, now - sc_.planning.window_s);
    const double window_s = now - window_start;
    std::vector<std::size_t> counts(queries_.size(), 0);
    for (auto it = jobs_.rbegin(); it != jobs_.rend() && it->arrival >= window_start; ++it) ++counts[it->query];
    s.window.window_hours = window_s / 3600.0;
    const auto& phase = sc_.phase_at(now);
    s.window.txn_rate_per_s = phase.txn_clients * sc_.txn.rate_per_client_per_s;
    for (std::size_t i = 0; i < queries_.size(); ++i) {
      if (counts[i] == 0) continue;
      auto q = queries_[i];
      q.arrival_rate_per_hour = static_cast<double>(counts[i]) / s.window.window_hours;
      s.window.queries.push_back(std::move(q));
    }

    // Load state and current metrics come from the recent gated records.
    const double load_start = std::max({0.0, now - sc_.planning.load_window_s, gate_});
    std::vector<const MetricRecord*> recent;
    for (const auto& r : log_.records) {
      if (r.t - r.span_s >= load_start - 1e-9 && r.t <= now) recent.push_back(&r);
    }
    if (recent.empty() && !log_.records.empty()) recent.push_back(&log_.records.back());
    double span = 0.0;
    for (const auto* r : recent) span += r->span_s;
    const double lo = recent.empty() ? now : recent.front()->t - recent.front()->span_s;
    for (auto e : kAllEngines) {
      const auto i = engine_index(e);
      double u = 0.0;
      for (const auto* r : recent) u += std::isnan(r->cpu[i]) ? 0.0 : r->cpu[i] * r->span_s;
      s.load.engines[i].utilization = span > 0.0 ? u / span : 0.0;
    }
    double txn_u = 0.0;
    std::vector<double> txn_p90;
    for (const auto* r : recent) {
      txn_u += r->txn_utilization * r->span_s;
      txn_p90.push_back(r->txn_p90_s);
    }
    s.load.txn_work_s_per_hour = span > 0.0 ? txn_u / span * 3600.0 : 0.0;

    std::array<double, kEngineCount> service{};
    std::array<std::size_t, kEngineCount> n{};
    std::vector<double> lat;
    std::map<std::string, std::vector<double>> by_class;
    for (auto it = jobs_.rbegin(); it != jobs_.rend() && it->arrival >= lo - 86400.0; ++it) {
      if (it->start >= lo && it->start < now) {
        service[engine_index(it->engine)] += it->service_s;
        ++n[engine_index(it->engine)];
      }
      if (it->finish >= lo && it->finish <= now) {
        lat.push_back(it->finish - it->arrival);
        if (const auto& tag = queries_[it->query].tag; !tag.empty()) by_class[tag].push_back(lat.back());
      }
    }
    for (std::size_t i = 0; i < kEngineCount; ++i) {
      s.load.engines[i].observed_runtime_s_per_hour = span > 0.0 ? service[i] * 3600.0 / span : 0.0;
      s.load.engines[i].mean_processing_s = n[i] ? service[i] / static_cast<double>(n[i]) : 0.0;
    }
    s.metrics.txn_p90_s = txn_p90.empty() ? 0.0 : percentile(txn_p90, sc_.slo.percentile);
    s.metrics.query_p90_s = lat.empty() ? 0.0 : percentile(lat, sc_.slo.percentile);
    for (const auto& [tag, v] : by_class) s.metrics.class_p90_s[tag] = percentile(v, sc_.slo.percentile);
    s.metrics.cost_per_hour = log_.records.empty() ? fixed_cost_per_hour(state_.active, sc_.pricing, sc_.catalog)
                                                   : log_.records.back().cost_per_hour;
    return s;
  }

  void replan(double now, const PlanningSnapshot& snap) {
    if (snap.window.queries.empty()) {
      event(now, "plan_skipped", {{"reason", "empty planning window"}});
      return;
    }
    PlanResult result;
    try {
      result = plan_from_snapshot(snap, sc_, *predictor_);
    } catch (const NoFeasibleBlueprint& e) {
      event(now, "plan_infeasible", {{"message", e.what()}});
      return;
    }
    if (result.kept_current) {
      event(now, "plan_kept", {{"w", finite_or_string(result.w)}});
      return;
    }
    const auto predictions = predict_all(*predictor_, snap.window.queries);
    auto forest = std::make_shared<const RoutingForest>(
        train_routing_forest(snap.window, predictions, sc_.catalog, sc_.planning.forest));
    Blueprint target = result.blueprint;
    target.routing.online_policy = forest;
    auto diff = diff_blueprints(state_.active, target, sc_.catalog);
    const auto est = transition_time_cost(diff, sc_.pricing, warehouse_data_bytes(state_.active, sc_.catalog));
    event(now, "plan_selected",
          {{"w", finite_or_string(result.w)},
           {"current_w", finite_or_string(result.current_w)},
           {"transition_time_s", est.time_s},
           {"transition_cost", est.cost},
           {"provisionings_considered", result.provisionings_considered},
           {"candidates_scored", result.candidates_scored},
           {"blueprint", target.to_json()},
           {"transition", diff.to_json()}});
    if (apply_transition(state_, std::move(target), std::move(diff), est, sc_.failover)) on_activation(now);
  }

  void on_activation(double now) {
    event(now, "transition_complete", {{"blueprint", state_.active.to_json()}, {"change_count", state_.change_count}});
    if (!first_activation_) first_activation_ = now;
    trigger_state_.last_change_at = now;
    trigger_state_.recheck_fired = false;
    gate_ = now;
  }

  RunResult finish() {
    const auto& records = log_.records;
    std::size_t ok = 0, post = 0, post_ok = 0;
    for (const auto& r : records) {
      const bool c = slo_compliant(r, sc_.slo);
      ok += c;
      if (first_activation_ && r.t - r.span_s >= *first_activation_) {
        ++post;
        post_ok += c;
      }
    }
    auto frac = [](std::size_t a, std::size_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 1.0; };
    std::size_t plans = 0, triggers = 0;
    for (const auto& e : log_.events) {
      plans += e.kind == "plan_selected" || e.kind == "plan_kept" || e.kind == "plan_infeasible";
      triggers += e.kind == "trigger";
    }
    log_.summary = {
        {"scenario", sc_.name},
        {"seed", sc_.seed},
        {"duration_s", state_.clock},
        {"cost_initial", records.empty() ? 0.0 : records.front().cost_per_hour},
        {"cost_final", records.empty() ? 0.0 : records.back().cost_per_hour},
        {"slo_compliance", frac(ok, records.size())},
        {"slo_compliance_post_transition", frac(post_ok, post)},
        {"change_count", state_.change_count},
        {"first_change_at", first_activation_ ? nlohmann::json(*first_activation_) : nlohmann::json(nullptr)},
        {"triggers", triggers},
        {"plans", plans},
        {"arrivals", arrivals_},
        {"completed", completed_},
        {"in_flight", heap_.size()},
        {"rejected", rejected_},
        {"final_blueprint", state_.active.to_json()}};
    RunResult out;
    out.log = std::move(log_);
    out.snapshots = std::move(snapshots_);
    out.final_blueprint = state_.active;
    return out;
  }

  const ScenarioConfig& sc_;
  const RunOptions& opt_;
  std::shared_ptr<const EngineGroundTruth> truth_;
  std::shared_ptr<const RuntimePredictor> predictor_;
  EngineModels models_;
  std::mt19937_64 rng_;

  std::vector<WorkloadQuery> queries_;
  std::map<std::string, std::size_t> query_index_;
  std::vector<std::vector<std::size_t>> phase_queries_;

  SimState state_;
  TriggerState trigger_state_;
  double gate_ = 0.0;
  std::optional<double> first_activation_;

  std::vector<Job> jobs_;
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> heap_;
  std::array<double, kEngineCount> busy_until_{};

  double interval_start_ = 0.0;
  std::vector<double> tick_txn_;
  std::vector<bool> tick_spike_;
  std::vector<std::size_t> interval_completed_;
  double interval_scan_bytes_ = 0.0;
  std::size_t interval_arrivals_ = 0;

  std::size_t arrivals_ = 0;
  std::size_t completed_ = 0;
  std::size_t rejected_ = 0;

  MetricsLog log_;
  std::vector<PlanningSnapshot> snapshots_;
};

} // namespace

RunResult run_scenario(const ScenarioConfig& scenario, const RunOptions& options) {
  Simulation sim(scenario, options);
  return sim.run();
}

} // namespace blueprintd

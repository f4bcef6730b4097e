#include "fixtures.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/predictor.hpp"
#include "blueprintd/simulator.hpp"
#include "blueprintd/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>

using namespace blueprintd;

namespace {

const std::filesystem::path kScenarios{BLUEPRINTD_SCENARIO_DIR};

ScenarioConfig scenario(const char* name) { return ScenarioConfig::load(kScenarios / name); }

/// One-minute records with the given RowStore CPU and quiet latencies.
std::vector<MetricRecord> cpu_trace(std::initializer_list<std::pair<double, int>> segments) {
  std::vector<MetricRecord> out;
  double t = 0.0;
  for (const auto& [cpu, minutes] : segments) {
    for (int i = 0; i < minutes; ++i) {
      MetricRecord r;
      t += 60.0;
      r.t = t;
      r.span_s = 60.0;
      r.cpu = {cpu, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
      r.txn_p90_s = 0.001;
      out.push_back(r);
    }
  }
  return out;
}

std::size_t count_events(const MetricsLog& log, std::string_view kind) {
  return static_cast<std::size_t>(
      std::count_if(log.events.begin(), log.events.end(), [&](const SimEvent& e) { return e.kind == kind; }));
}

} // namespace

TEST_SUITE("simulator") {
  TEST_CASE("sustained high CPU fires") {
    const auto trace = cpu_trace({{0.5, 5}, {0.9, 10}});
    const auto fired = evaluate_triggers(trace, {}, {}, trace.back().t, {});
    REQUIRE(fired.has_value());
    CHECK(fired->cause == TriggerCause::CpuHigh);
    CHECK(fired->engine == EngineId::RowStore);
  }

  TEST_CASE("short CPU bursts do not fire") {
    const auto trace = cpu_trace({{0.5, 5}, {0.9, 5}, {0.5, 10}});
    CHECK_FALSE(evaluate_triggers(trace, {}, {}, trace.back().t, {}).has_value());
    const auto short_high = cpu_trace({{0.5, 5}, {0.9, 9}});
    CHECK_FALSE(evaluate_triggers(short_high, {}, {}, short_high.back().t, {}).has_value());
  }

  TEST_CASE("sustained low CPU fires") {
    const auto trace = cpu_trace({{0.05, 10}});
    const auto fired = evaluate_triggers(trace, {}, {}, trace.back().t, {});
    REQUIRE(fired.has_value());
    CHECK(fired->cause == TriggerCause::CpuLow);
  }

  TEST_CASE("latency triggers outrank CPU triggers") {
    auto trace = cpu_trace({{0.9, 10}});
    for (auto& r : trace) r.txn_p90_s = 1.0;
    SloConfig slo;
    const auto fired = evaluate_triggers(trace, {}, slo, trace.back().t, {});
    REQUIRE(fired.has_value());
    CHECK(fired->cause == TriggerCause::TxnLatency);
  }

  TEST_CASE("recheck fires once per change") {
    const auto trace = cpu_trace({{0.5, 60}});
    TriggerState state;
    state.last_change_at = 0.0;
    CHECK_FALSE(evaluate_triggers(trace, {}, {}, 3599.0, state).has_value());
    const auto fired = evaluate_triggers(trace, {}, {}, 3600.0, state);
    REQUIRE(fired.has_value());
    CHECK(fired->cause == TriggerCause::Recheck);
    state.recheck_fired = true;
    CHECK_FALSE(evaluate_triggers(trace, {}, {}, 7200.0, state).has_value());
  }

  TEST_CASE("trigger thresholds are validated") {
    CHECK_THROWS_AS(TriggerConfig::from_json(nlohmann::json{{"cpu_low", 0.9}, {"cpu_high", 0.5}}), ConfigError);
  }

  TEST_CASE("transitions") {
    const auto cat = fixtures::small_catalog();
    SimState state;
    state.active = fixtures::blueprint(cat, EngineSet{EngineId::RowStore, EngineId::Warehouse});
    auto paused = fixtures::blueprint(cat, EngineSet{EngineId::RowStore}, 0);
    auto plan = diff_blueprints(state.active, paused, cat);
    const FailoverConfig failover;

    SUBCASE("zero-duration plans activate immediately") {
      CHECK(apply_transition(state, paused, plan, {0.0, 0.0}, failover));
      CHECK_FALSE(state.pending.has_value());
      CHECK(state.active.same_design(paused));
      CHECK(state.change_count == 1);
    }
    SUBCASE("timed plans activate at their completion time") {
      state.clock = 50.0;
      CHECK_FALSE(apply_transition(state, paused, plan, {1000.0, 0.0}, failover));
      REQUIRE(state.pending.has_value());
      CHECK(state.pending->completes_at == 1050.0);
      state.clock = 1049.0;
      CHECK_FALSE(complete_transition(state, failover));
      CHECK_FALSE(state.active.same_design(paused));
      state.clock = 1050.0;
      CHECK(complete_transition(state, failover));
      CHECK(state.active.same_design(paused));
    }
    SUBCASE("a second transition in flight is refused") {
      apply_transition(state, paused, plan, {1000.0, 0.0}, failover);
      CHECK_THROWS_AS(apply_transition(state, paused, plan, {10.0, 0.0}, failover), TransitionInFlight);
    }
    SUBCASE("RowStore instance changes start a failover spike") {
      auto bigger = state.active;
      bigger.provisionings[EngineId::RowStore] = fixtures::prov(EngineId::RowStore, "rs.xlarge", 1, 4);
      const auto p = diff_blueprints(state.active, bigger, cat);
      state.clock = 10.0;
      apply_transition(state, bigger, p, {300.0, 0.0}, failover);
      state.clock = 310.0;
      REQUIRE(complete_transition(state, failover));
      REQUIRE(state.spike_until.has_value());
      CHECK(*state.spike_until == 310.0 + failover.duration_s);
    }
  }

  TEST_CASE("nearest-rank percentile") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(percentile(v, 0.9) == 90.0);
    const std::vector<double> one{4.2};
    for (double p : {0.01, 0.5, 0.9, 1.0}) CHECK(percentile(one, p) == 4.2);
    const std::vector<double> same(17, 3.0);
    CHECK(percentile(same, 0.9) == 3.0);
    CHECK_THROWS_AS(percentile(std::vector<double>{}, 0.9), EmptySamples);
    const std::vector<double> w{1.0, 0.0, 3.0};
    const std::vector<double> s{10.0, 20.0, 30.0};
    CHECK(percentile(s, w, 0.25) == 10.0);
    CHECK(percentile(s, w, 0.26) == 30.0);
  }

  TEST_CASE("runs are bitwise deterministic") {
    const auto sc = scenario("flat.json");
    const auto a = run_scenario(sc);
    const auto b = run_scenario(sc);
    CHECK(a.log.to_csv() == b.log.to_csv());
    CHECK(a.log.events_json().dump() == b.log.events_json().dump());
    CHECK(a.log.summary.dump() == b.log.summary.dump());
  }

  TEST_CASE("different seeds give different arrivals") {
    auto sc = scenario("flat.json");
    const auto a = run_scenario(sc);
    sc.seed += 1;
    const auto b = run_scenario(sc);
    CHECK(a.log.to_csv() != b.log.to_csv());
  }

  TEST_CASE("every arrival completes or is still in flight") {
    for (const char* name : {"flat.json", "scale_down.json", "txn_scale_up.json"}) {
      CAPTURE(name);
      const auto r = run_scenario(scenario(name));
      const auto& s = r.log.summary;
      CHECK(s["rejected"].get<std::size_t>() == 0);
      CHECK(s["arrivals"].get<std::size_t>() == s["completed"].get<std::size_t>() + s["in_flight"].get<std::size_t>());
      std::size_t logged = 0;
      for (const auto& rec : r.log.records) logged += rec.arrivals;
      CHECK(logged == s["arrivals"].get<std::size_t>());
    }
  }

  TEST_CASE("clock and record timestamps are monotone") {
    const auto r = run_scenario(scenario("scale_down.json"));
    for (std::size_t i = 1; i < r.log.records.size(); ++i) CHECK(r.log.records[i].t >= r.log.records[i - 1].t);
    for (std::size_t i = 1; i < r.log.events.size(); ++i) CHECK(r.log.events[i].t >= r.log.events[i - 1].t);
  }

  TEST_CASE("triggers do not fire while a transition is pending") {
    const auto r = run_scenario(scenario("scale_down.json"));
    bool pending = false;
    for (const auto& e : r.log.events) {
      if (e.kind == "plan_selected") pending = e.detail["transition_time_s"].get<double>() > 0.0;
      if (e.kind == "transition_complete") pending = false;
      if (e.kind == "trigger") CHECK_FALSE(pending);
    }
  }

  TEST_CASE("the oracle predicts exactly what the simulator charges at base provisioning") {
    for (const char* name : {"scale_down.json", "txn_scale_up.json"}) {
      const auto sc = scenario(name);
      auto truth = std::make_shared<EngineGroundTruth>(sc.catalog, sc.truth);
      const auto predictor = make_predictor(sc.planning, truth);
      for (const auto& phase : sc.phases) {
        for (const auto& q : phase.queries) {
          for (auto e : kAllEngines) {
            const int base = sc.truth.provisioning[engine_index(e)].base_vcpus;
            CHECK(predictor->predict_runtime(q, e) == truth->runtime_on(q.query, e, base));
            CHECK(q_error(predictor->predict_runtime(q, e), truth->runtime_s(q.query, e)) == 1.0);
          }
        }
      }
    }
  }

  TEST_CASE("flat workload keeps its blueprint") {
    const auto r = run_scenario(scenario("flat.json"));
    CHECK(r.log.summary["change_count"].get<std::size_t>() == 0);
    CHECK(count_events(r.log, "transition_complete") == 0);
  }

  TEST_CASE("scale-down pauses the Warehouse and lowers cost") {
    const auto sc = scenario("scale_down.json");
    const auto r = run_scenario(sc);
    bool paused = false;
    for (const auto& e : r.log.events) {
      if (e.kind != "transition_complete") continue;
      const auto bp = Blueprint::from_json(e.detail["blueprint"], &sc.pricing);
      paused = paused || !bp.serving(EngineId::Warehouse);
    }
    CHECK(paused);
    CHECK(r.log.summary["cost_final"].get<double>() < r.log.summary["cost_initial"].get<double>());
  }

  TEST_CASE("scale-down first plan matches exhaustive search on the same window") {
    const auto sc = scenario("scale_down.json");
    RunOptions opt;
    opt.stop_at_first_trigger = true;
    const auto r = run_scenario(sc, opt);
    REQUIRE_FALSE(r.snapshots.empty());
    const auto& snap = r.snapshots.front();
    auto truth = std::make_shared<EngineGroundTruth>(sc.catalog, sc.truth);
    const auto predictor = make_predictor(sc.planning, truth);
    const auto planned = plan_from_snapshot(snap, sc, *predictor);
    CHECK_FALSE(planned.blueprint.serving(EngineId::Warehouse));

    const auto inst = search_instance_from_snapshot(sc, snap, snap.window.queries, snap.window.size(), *predictor);
    const ScoringInputs inputs{inst.catalog, inst.pricing, inst.caps, inst.models, inst.load, inst.scoring};
    const CandidateScorer scorer(inst.current, inst.window, inst.predictions, inputs);
    const auto ex = exhaustive_search(scorer, inst.provisionings, inst.objective);
    CHECK(planned.w <= ex.w);
    CHECK(scorer.materialize(ex.candidate).serving(EngineId::Warehouse) == false);
  }

  TEST_CASE("transaction surge scales RowStore up and recovers") {
    const auto sc = scenario("txn_scale_up.json");
    const auto r = run_scenario(sc);
    const int before = sc.initial.provisioning(EngineId::RowStore)->total_vcpus();
    std::optional<double> activated;
    for (const auto& e : r.log.events) {
      if (e.kind != "transition_complete") continue;
      const auto bp = Blueprint::from_json(e.detail["blueprint"], &sc.pricing);
      if (bp.provisioning(EngineId::RowStore)->total_vcpus() > before && !activated) activated = e.t;
    }
    REQUIRE(activated.has_value());
    std::size_t post = 0, ok = 0;
    for (const auto& rec : r.log.records) {
      if (rec.t - rec.span_s < *activated) continue;
      ++post;
      ok += rec.txn_p90_s <= sc.slo.txn_p90_s;
    }
    REQUIRE(post > 0);
    CHECK(static_cast<double>(ok) / static_cast<double>(post) >= 0.95);
  }

  TEST_CASE("metrics CSV is long format without NaN") {
    const auto r = run_scenario(scenario("flat.json"));
    const auto csv = r.log.to_csv();
    CHECK(csv.rfind("timestamp,metric,value\n", 0) == 0);
    CHECK(csv.find("nan") == std::string::npos);
    CHECK(csv.find("cpu.RowStore") != std::string::npos);
  }

  TEST_CASE("scenario errors surface as ConfigError") {
    CHECK_THROWS_AS(ScenarioConfig::load(kScenarios / "does_not_exist.json"), ConfigError);
    auto doc = load_json_file(kScenarios / "flat.json");
    doc["phases"][0]["start_s"] = 10;
    CHECK_THROWS_AS(ScenarioConfig::from_json(doc, kScenarios), ConfigError);
  }
}

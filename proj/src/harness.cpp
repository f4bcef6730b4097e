#include "blueprintd/harness.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"
#include "blueprintd/router.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace blueprintd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return "inf";
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

TableStats make_table(std::string name, double rows, double bytes,
                      std::initializer_list<std::tuple<const char*, double, double>> columns) {
  TableStats t;
  t.name = std::move(name);
  t.row_count = rows;
  t.bytes = bytes;
  for (const auto& [col, hi, distinct] : columns) {
    t.columns.emplace(col, Histogram::uniform(0.0, hi, rows, distinct));
  }
  return t;
}

} // namespace

PricingCatalog reference_pricing() {
  PricingCatalog p;
  p.instances[engine_index(EngineId::RowStore)] = {{"rs.small", 1, 0.13},
                                                   {"rs.large", 2, 0.26},
                                                   {"rs.xlarge", 4, 0.52},
                                                   {"rs.2xlarge", 8, 1.04},
                                                   {"rs.4xlarge", 16, 2.08}};
  p.instances[engine_index(EngineId::Warehouse)] = {
      {"dc2.large", 2, 0.25}, {"ra3.xlplus", 4, 1.086}, {"ra3.4xlarge", 12, 3.26}};
  p.scan_price_per_tb = 5.0;
  p.storage_per_row_hour[engine_index(EngineId::RowStore)]["*"] = 1e-10;
  p.storage_per_row_hour[engine_index(EngineId::Warehouse)]["*"] = 2e-11;
  p.storage_per_row_hour[engine_index(EngineId::ScanService)]["*"] = 1e-11;
  p.export_rate_bps = {40.0 * kBytesPerMB, 100.0 * kBytesPerMB, 200.0 * kBytesPerMB};
  p.import_rate_bps = {20.0 * kBytesPerMB, 100.0 * kBytesPerMB, 200.0 * kBytesPerMB};
  p.rowstore_change_s = 300.0;
  p.elastic_resize_s = 900.0;
  p.classic_resize_bps = 18.0 * kBytesPerMB;
  p.transfer_price_per_tb = 10.0;
  return p;
}

SearchInstance generate_search_instance(std::uint64_t seed, std::size_t n_queries) {
  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SearchInstance inst;
  inst.pricing = reference_pricing();
  inst.caps.keywords["<=>"] = EngineSet{EngineId::RowStore};

  std::vector<TableStats> tables;
  for (int i = 0; i < 6; ++i) {
    const double rows = std::round(log_uniform(rng, 1e4, 1e8));
    tables.push_back(make_table("t" + std::to_string(i), rows, rows * (20.0 + 180.0 * unit(rng)),
                                {{"k", rows, rows}, {"v", 1000.0, 1000.0}}));
  }
  inst.catalog = DatasetCatalog(tables);

  const auto keywords = inst.caps.keyword_list();
  std::uniform_int_distribution<int> table_pick(0, 5);
  for (std::size_t i = 0; i < n_queries; ++i) {
    const int n_tables = 1 + static_cast<int>(unit(rng) * 3.0);
    std::vector<int> ids;
    while (static_cast<int>(ids.size()) < n_tables) {
      const int t = table_pick(rng);
      if (std::find(ids.begin(), ids.end(), t) == ids.end()) ids.push_back(t);
    }
    std::string from, where;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const auto name = "t" + std::to_string(ids[k]);
      from += (k ? ", " : "") + name;
      if (k > 0) where += "t" + std::to_string(ids[0]) + ".k = " + name + ".k AND ";
    }
    const auto first = "t" + std::to_string(ids[0]);
    where += first + ".v < " + std::to_string(static_cast<int>(10 + unit(rng) * 990));
    if (unit(rng) < 0.1) where += " AND " + first + ".v <=> '[1,2,3]'";
    const auto sql = "SELECT COUNT(*) FROM " + from + " WHERE " + where;
    inst.window.queries.push_back(
        make_workload_query(sql, log_uniform(rng, 1.0, 60.0), "q" + std::to_string(i), {}, keywords));

    QueryPrediction p;
    double bytes = 0.0;
    for (int t : ids) bytes += tables[static_cast<std::size_t>(t)].bytes;
    p.bytes_scanned = bytes;
    p.runtime_s[engine_index(EngineId::RowStore)] = log_uniform(rng, 0.05, 120.0);
    p.runtime_s[engine_index(EngineId::Warehouse)] = log_uniform(rng, 1.0, 30.0);
    p.runtime_s[engine_index(EngineId::ScanService)] = 2.0 + bytes / kBytesPerGB * (0.5 + 1.5 * unit(rng));
    inst.predictions.push_back(p);
  }
  inst.window.window_hours = 1.0;
  inst.window.txn_rate_per_s = 50.0;

  const GroundTruthParams truth;
  inst.models.provisioning = truth.provisioning;
  inst.models.txn = truth.txn;

  // Current blueprint: RowStore holds everything, the Warehouse a subset.
  const auto& rs_types = inst.pricing.instances[engine_index(EngineId::RowStore)];
  const auto& wh_types = inst.pricing.instances[engine_index(EngineId::Warehouse)];
  Blueprint& bp = inst.current;
  bp.engines = EngineSet::all();
  const auto& rs = rs_types[1 + static_cast<std::size_t>(unit(rng) * 2.0)];
  bp.provisionings[EngineId::RowStore] = {EngineId::RowStore, rs.name, 1 + static_cast<int>(unit(rng) * 2.0), rs.vcpus};
  const auto wh_choice = static_cast<std::size_t>(unit(rng) * 4.0);
  const auto& wh = wh_types[wh_choice == 3 ? 1 : 0];
  bp.provisionings[EngineId::Warehouse] = {EngineId::Warehouse, wh.name,
                                           wh_choice == 0 ? 0 : (wh_choice == 2 ? 2 : 1), wh.vcpus};
  bp.provisionings[EngineId::ScanService] = {EngineId::ScanService, "", 0, 1};
  for (const auto& t : tables) {
    EngineSet s{EngineId::RowStore};
    if (bp.serving(EngineId::Warehouse) && unit(rng) < 0.5) s.insert(EngineId::Warehouse);
    if (unit(rng) < 0.3) s.insert(EngineId::ScanService);
    bp.placement.placement[t.name] = s;
    bp.placement.writer[t.name] = EngineId::RowStore;
  }
  for (std::size_t i = 0; i < n_queries; ++i) {
    const auto eligible = eligible_engines(inst.window.queries[i].query, bp, inst.caps).members();
    bp.routing.assignments[inst.window.queries[i].query_id] =
        eligible[static_cast<std::size_t>(unit(rng) * static_cast<double>(eligible.size()))];
  }

  // Load consistent with the current assignment.
  const auto current = provisioning_set(bp);
  for (auto e : kAllEngines) {
    const auto i = engine_index(e);
    double obs = 0.0;
    for (std::size_t q = 0; q < n_queries; ++q) {
      if (bp.routing.assignments.at(inst.window.queries[q].query_id) != e) continue;
      const double g = inst.predictions[q].runtime_s[i];
      obs += inst.window.queries[q].arrival_rate_per_hour *
             (e == EngineId::ScanService ? g
                                         : adjust_for_provisioning(g, inst.models.provisioning[i],
                                                                   std::max(1, current[i].total_vcpus())));
    }
    inst.load.engines[i].observed_runtime_s_per_hour = obs;
    inst.load.engines[i].utilization = current[i].serving() && e != EngineId::ScanService
                                           ? std::min(0.9, obs / 3600.0 / std::max(1, current[i].total_vcpus()))
                                           : 0.0;
  }
  const double txn_share = 0.1 + 0.4 * unit(rng);
  inst.load.txn_work_s_per_hour = txn_share * 3600.0;
  auto& rs_load = inst.load.engines[engine_index(EngineId::RowStore)];
  rs_load.utilization = std::min(0.95, rs_load.utilization + txn_share);

  inst.scoring = ScoringConfig{0.9, 1.0 / 3600.0, kOverloadEpsilon};
  auto& slo = inst.objective.slo;
  slo.txn_p90_s = 0.008 + 0.03 * unit(rng);
  slo.query_p90_s = 20.0 + 100.0 * unit(rng);
  slo.gamma = 2.0;
  auto& m = inst.objective.metrics;
  m.txn_p90_s = txn_latency(std::min(0.95, rs_load.utilization), inst.models.txn);
  m.query_p90_s = slo.query_p90_s * (0.5 + unit(rng));
  m.cost_per_hour = 0.0;
  for (const auto& p : current) m.cost_per_hour += inst.pricing.node_cost_per_hour(p);

  // Neighbour provisionings, current first, trimmed to the exhaustive guard.
  const auto lattice = ProvisioningLattice::from_pricing(inst.pricing, 1, 64);
  auto provs = enumerate_neighbor_provisionings(current, lattice);
  std::shuffle(provs.begin(), provs.end(), rng);
  std::stable_partition(provs.begin(), provs.end(), [&](const ProvisioningSet& p) { return p == current; });
  const double per_prov = std::pow(3.0, static_cast<double>(n_queries));
  const auto cap = std::min<std::size_t>(8, static_cast<std::size_t>(kExhaustiveLimit / per_prov));
  provs.resize(std::min(provs.size(), std::max<std::size_t>(1, cap)));
  inst.provisionings = std::move(provs);
  return inst;
}

SearchInstance search_instance_from_snapshot(const ScenarioConfig& scenario, const PlanningSnapshot& snap,
                                             std::vector<WorkloadQuery> queries, std::size_t max_queries,
                                             const RuntimePredictor& predictor) {
  if (queries.empty()) throw EmptyWorkload("search comparison needs at least one query");
  SearchInstance inst;
  inst.catalog = scenario.catalog;
  inst.pricing = scenario.pricing;
  inst.caps = scenario.caps;
  inst.current = snap.current;
  inst.window = snap.window;
  if (queries.size() > max_queries) queries.resize(max_queries);
  inst.window.queries = std::move(queries);
  inst.predictions = predict_all(predictor, inst.window.queries);
  inst.models = snap.models;
  inst.load = snap.load;
  inst.scoring = scenario.planning.scoring;
  inst.objective = Objective{scenario.slo, snap.metrics};

  const auto lattice =
      ProvisioningLattice::from_pricing(scenario.pricing, scenario.planning.radius, scenario.planning.max_nodes);
  auto provs = enumerate_neighbor_provisionings(provisioning_set(snap.current), lattice);
  const double per_prov = std::pow(3.0, static_cast<double>(inst.window.queries.size()));
  const auto cap = static_cast<std::size_t>(kExhaustiveLimit / per_prov);
  if (cap == 0) throw SearchSpaceTooLarge("workload too large for an exhaustive comparison");
  // Keep the current provisioning plus an evenly spaced subset.
  if (provs.size() > cap) {
    std::vector<ProvisioningSet> kept;
    const auto current = provisioning_set(snap.current);
    kept.push_back(current);
    for (std::size_t i = 0; kept.size() < cap && i < provs.size(); ++i) {
      const std::size_t j = i * provs.size() / cap;
      if (j < provs.size() && provs[j] != current &&
          std::find(kept.begin(), kept.end(), provs[j]) == kept.end()) {
        kept.push_back(provs[j]);
      }
    }
    provs = std::move(kept);
  }
  inst.provisionings = std::move(provs);
  return inst;
}

nlohmann::json SearchComparison::to_json() const {
  return {{"beam_w", finite_or_string(beam_w)},
          {"exhaustive_w", finite_or_string(exhaustive_w)},
          {"naive_greedy_w", finite_or_string(greedy_w)},
          {"random_w", finite_or_string(random_w)},
          {"beam_candidates_scored", beam_scored},
          {"exhaustive_candidates_scored", exhaustive_scored},
          {"queries", query_count},
          {"provisionings", provisioning_count}};
}

SearchComparison compare_search(const SearchInstance& inst, std::size_t beam_width, std::size_t random_samples,
                                std::uint64_t seed) {
  const ScoringInputs inputs{inst.catalog, inst.pricing, inst.caps, inst.models, inst.load, inst.scoring};
  const CandidateScorer scorer(inst.current, inst.window, inst.predictions, inputs);
  const auto order = order_queries(inst.window, inst.predictions);
  SearchComparison out;
  out.query_count = inst.window.queries.size();
  out.provisioning_count = inst.provisionings.size();

  std::optional<RankKey> best;
  for (const auto& prov : inst.provisionings) {
    const auto r = beam_search(scorer, prov, inst.objective, beam_width, order);
    if (!r) continue;
    out.beam_scored += r->candidates_scored;
    const auto key = r->key(inst.objective);
    if (!best || key < *best) best = key;
  }
  out.beam_w = best ? best->w : kInf;

  const auto exhaustive = exhaustive_search(scorer, inst.provisionings, inst.objective);
  out.exhaustive_w = exhaustive.w;
  out.exhaustive_scored = exhaustive.candidates_scored;
  out.greedy_w = naive_greedy(scorer, inst.provisionings, inst.objective).w;
  out.random_w = random_search(scorer, inst.provisionings, inst.objective, random_samples, seed).w;
  return out;
}

nlohmann::json SensitivityReport::to_json() const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& c : cells) {
    cells_json.push_back({{"fraction", c.fraction},
                          {"error", c.error},
                          {"seed", c.seed},
                          {"blueprint_hash", to_hex(c.blueprint_hash)},
                          {"unchanged", c.unchanged},
                          {"feasible", c.feasible},
                          {"w", finite_or_string(c.w)}});
  }
  return {{"baseline_hash", to_hex(baseline_hash)},
          {"baseline_w", finite_or_string(baseline_w)},
          {"snapshot_t", snapshot_t},
          {"cells", cells_json}};
}

SensitivityReport run_sensitivity(const ScenarioConfig& scenario, std::span<const double> fractions,
                                  std::span<const double> errors, std::size_t seeds) {
  auto truth = std::make_shared<const EngineGroundTruth>(scenario.catalog, scenario.truth);
  RunOptions opt;
  opt.stop_at_first_trigger = true;
  opt.predictor = std::make_shared<const OraclePredictor>(truth);
  const auto run = run_scenario(scenario, opt);
  if (run.snapshots.empty()) throw ConfigError("scenario never triggers planning");
  const auto& snap = run.snapshots.front();

  const OraclePredictor oracle(truth);
  const auto baseline = plan_from_snapshot(snap, scenario, oracle);
  SensitivityReport report;
  report.baseline_hash = baseline.blueprint.hash();
  report.baseline_w = baseline.w;
  report.snapshot_t = snap.t;
  for (double f : fractions) {
    for (double e : errors) {
      for (std::size_t s = 0; s < seeds; ++s) {
        SensitivityCell cell{f, e, scenario.seed + s, 0, false, true, kInf};
        const NoisyOraclePredictor noisy(truth, NoiseConfig{f, e, cell.seed});
        try {
          const auto r = plan_from_snapshot(snap, scenario, noisy);
          cell.blueprint_hash = r.blueprint.hash();
          cell.unchanged = r.blueprint.same_design(baseline.blueprint);
          cell.w = r.w;
        } catch (const NoFeasibleBlueprint&) {
          cell.feasible = false;
        }
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

DatasetCatalog router_catalog() {
  return DatasetCatalog({
      make_table("events", 1e8, 6e7, {{"ts", 1e6, 1e6}, {"user_id", 1e6, 1e6}}),
      make_table("orders", 2e7, 4e9, {{"id", 2e7, 2e7}, {"amount", 1000.0, 1000.0}, {"customer_id", 1e6, 1e6}}),
      make_table("customers", 1e6, 3e8, {{"id", 1e6, 1e6}, {"region", 50.0, 50.0}}),
      make_table("items", 1e5, 2e7, {{"id", 1e5, 1e5}, {"price", 100.0, 100.0}}),
  });
}

std::vector<WorkloadQuery> generate_router_workload(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 3);
  std::vector<WorkloadQuery> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string sql;
    const double frac = std::pow(10.0, -4.0 * unit(rng));
    switch (pick(rng)) {
    case 0:
      sql = "SELECT COUNT(*) FROM events WHERE events.ts < " + std::to_string(1e6 * frac);
      break;
    case 1:
      sql = "SELECT SUM(orders.amount) FROM orders WHERE orders.id < " + std::to_string(2e7 * frac);
      break;
    case 2:
      sql = "SELECT customers.region, COUNT(*) FROM orders, customers WHERE orders.customer_id = customers.id "
            "AND customers.region < " +
            std::to_string(0.5 + 49.5 * unit(rng)) + " GROUP BY customers.region";
      break;
    default:
      sql = "SELECT AVG(items.price) FROM items WHERE items.price < " + std::to_string(100.0 * frac);
      break;
    }
    out.push_back(make_workload_query(sql, 1.0, "r" + std::to_string(i)));
  }
  return out;
}

nlohmann::json RouterEvaluation::to_json() const {
  return {{"train_size", train_size},
          {"test_size", test_size},
          {"forest_slowdown", forest_slowdown},
          {"random_slowdown", random_slowdown},
          {"best_single_slowdown", best_single_slowdown},
          {"best_single_engine", std::string(to_string(best_single_engine))},
          {"max_nodes_visited", max_nodes_visited},
          {"node_budget", node_budget}};
}

RouterEvaluation evaluate_router(std::size_t n_queries, std::uint64_t seed, const GroundTruthParams& truth_params,
                                 const RoutingForestConfig& cfg) {
  if (n_queries < 2) throw EmptyWorkload("router evaluation needs at least two queries");
  const auto catalog = router_catalog();
  const EngineGroundTruth truth(catalog, truth_params);
  const auto queries = generate_router_workload(n_queries, seed);
  std::vector<std::array<double, kEngineCount>> runtimes;
  for (const auto& q : queries) {
    std::array<double, kEngineCount> rt{};
    for (auto e : kAllEngines) rt[engine_index(e)] = truth.runtime_s(q.query, e);
    runtimes.push_back(rt);
  }

  const std::size_t n_train = n_queries / 2;
  WorkloadWindow train;
  std::vector<QueryPrediction> train_preds;
  for (std::size_t i = 0; i < n_train; ++i) {
    train.queries.push_back(queries[i]);
    train_preds.push_back({runtimes[i], truth.bytes_scanned(queries[i].query)});
  }
  RoutingForestConfig forest_cfg = cfg;
  forest_cfg.seed = cfg.seed ^ seed;
  const auto forest = train_routing_forest(train, train_preds, catalog, forest_cfg);

  Blueprint bp;
  bp.engines = EngineSet::all();
  bp.provisionings[EngineId::RowStore] = {EngineId::RowStore, "rs.large", 1, 2};
  bp.provisionings[EngineId::Warehouse] = {EngineId::Warehouse, "dc2.large", 1, 2};
  bp.provisionings[EngineId::ScanService] = {EngineId::ScanService, "", 0, 1};
  for (const auto& t : catalog.tables()) {
    bp.placement.placement[t.name] = EngineSet::all();
    bp.placement.writer[t.name] = EngineId::RowStore;
  }
  const CapabilityConfig caps;

  RouterEvaluation out;
  out.train_size = n_train;
  out.test_size = n_queries - n_train;
  out.node_budget = static_cast<std::size_t>(cfg.n_trees) * static_cast<std::size_t>(cfg.max_depth);
  std::vector<RoutingDecision> forest_d, random_d;
  std::array<std::vector<RoutingDecision>, kEngineCount> single_d;
  std::mt19937_64 rng(mix64(seed ^ 0x7a11d0u));
  std::uniform_int_distribution<std::size_t> pick(0, kEngineCount - 1);
  for (std::size_t i = n_train; i < n_queries; ++i) {
    std::size_t visited = 0;
    forest.rank(routing_features(queries[i].query, catalog), &visited);
    out.max_nodes_visited = std::max(out.max_nodes_visited, visited);
    const EngineId chosen = route(queries[i], bp, &forest, caps, catalog);
    forest_d.push_back({chosen, runtimes[i]});
    random_d.push_back({kAllEngines[pick(rng)], runtimes[i]});
    for (auto e : kAllEngines) single_d[engine_index(e)].push_back({e, runtimes[i]});
  }
  out.forest_slowdown = routing_slowdown(forest_d);
  out.random_slowdown = routing_slowdown(random_d);
  out.best_single_slowdown = kInf;
  for (auto e : kAllEngines) {
    const double s = routing_slowdown(single_d[engine_index(e)]);
    if (s < out.best_single_slowdown) {
      out.best_single_slowdown = s;
      out.best_single_engine = e;
    }
  }
  return out;
}

} // namespace blueprintd

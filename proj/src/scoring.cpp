#include "blueprintd/scoring.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace blueprintd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kRow = engine_index(EngineId::RowStore);
constexpr std::size_t kWarehouse = engine_index(EngineId::Warehouse);
constexpr std::size_t kScan = engine_index(EngineId::ScanService);

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

} // namespace

double adjust_for_provisioning(double base_runtime_s, const ProvisioningConstants& c, int dest_vcpus) {
  if (dest_vcpus < 1) throw NonPositiveInput("destination vCPUs must be at least 1");
  return (c.c1 * static_cast<double>(c.base_vcpus) / dest_vcpus + c.c2) * base_runtime_s;
}

double queueing_delay(double utilization, double mean_processing_s, double percentile, double epsilon) {
  if (!(percentile > 0.0 && percentile < 1.0)) throw ConfigError("percentile must lie in (0, 1)");
  if (!(utilization >= 0.0) || utilization >= 1.0 - epsilon) {
    throw UtilizationOutOfRange("utilization " + std::to_string(utilization) + " is at or past the overload guard");
  }
  if (mean_processing_s < 0.0) throw NonPositiveInput("mean processing time must be nonnegative");
  if (utilization + percentile <= 1.0) return 0.0;
  return std::max(0.0, -mean_processing_s / (1.0 - utilization) * std::log((1.0 - percentile) / utilization));
}

double adjust_utilization(double measured, double candidate_sum_s, double observed_sum_s,
                          double fallback_constant) {
  if (observed_sum_s > 0.0) return clamp01(measured * candidate_sum_s / observed_sum_s);
  return clamp01(fallback_constant * candidate_sum_s);
}

double txn_latency(double utilization, const TxnModelConstants& c) {
  if (utilization >= c.M) throw Saturated("transaction utilization at or past the model pole");
  return c.a / (c.M - utilization) + c.b;
}

double adjust_txn_utilization(double utilization, int current_vcpus, int candidate_vcpus,
                              double query_load_factor) {
  if (current_vcpus < 1 || candidate_vcpus < 1) throw NonPositiveInput("vCPU counts must be at least 1");
  return clamp01(utilization * static_cast<double>(current_vcpus) / candidate_vcpus * query_load_factor);
}

nlohmann::json EngineModels::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (auto e : kAllEngines) j[std::string(to_string(e))] = provisioning[engine_index(e)].to_json();
  j["txn"] = txn.to_json();
  return j;
}

EngineModels EngineModels::from_json(const nlohmann::json& doc) {
  EngineModels m;
  for (auto e : kAllEngines) {
    const std::string name(to_string(e));
    if (doc.contains(name)) m.provisioning[engine_index(e)] = ProvisioningConstants::from_json(doc.at(name));
  }
  if (doc.contains("txn")) m.txn = TxnModelConstants::from_json(doc.at("txn"));
  return m;
}

nlohmann::json LoadState::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (auto e : kAllEngines) {
    const auto& l = engines[engine_index(e)];
    j[std::string(to_string(e))] = {{"utilization", l.utilization},
                                    {"observed_runtime_s_per_hour", l.observed_runtime_s_per_hour},
                                    {"mean_processing_s", l.mean_processing_s}};
  }
  j["txn_work_s_per_hour"] = txn_work_s_per_hour;
  return j;
}

nlohmann::json VectorScore::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return "inf";
  };
  nlohmann::json lat = nlohmann::json::array();
  for (double v : query_latencies) lat.push_back(num(v));
  return {{"query_latencies", lat},
          {"txn_latency", num(txn_latency)},
          {"operating_cost", operating_cost},
          {"transition_time_s", transition_time_s},
          {"transition_cost", transition_cost}};
}

double operating_cost(const Blueprint& bp, const WorkloadWindow& w, const PricingCatalog& pricing,
                      const DatasetCatalog& catalog, std::span<const double> bytes_scanned) {
  double cost = 0.0;
  for (const auto& [e, p] : bp.provisionings) {
    if (bp.engines.contains(e)) cost += pricing.node_cost_per_hour(p);
  }
  for (std::size_t i = 0; i < w.queries.size() && i < bytes_scanned.size(); ++i) {
    auto it = bp.routing.assignments.find(w.queries[i].query_id);
    if (it == bp.routing.assignments.end() || it->second != EngineId::ScanService) continue;
    cost += w.queries[i].arrival_rate_per_hour * bytes_scanned[i] * pricing.scan_price_per_byte();
  }
  for (const auto& [table, engines] : bp.placement.placement) {
    const double rows = catalog.table(table).row_count;
    for (auto e : engines.members()) cost += pricing.storage_rate(e, table) * rows;
  }
  return cost;
}

double change_duration_s(const ProvisioningChange& change, const PricingCatalog& pricing,
                         double warehouse_data_bytes) {
  switch (change.kind) {
  case ChangeKind::InstanceChange:
    return std::max(1, change.instance_changes) * pricing.rowstore_change_s;
  case ChangeKind::ElasticResize:
    return pricing.elastic_resize_s;
  case ChangeKind::ClassicResize:
    return warehouse_data_bytes / pricing.classic_resize_bps;
  case ChangeKind::Unpause:
    return change.engine == EngineId::RowStore ? std::max(1, change.instance_changes) * pricing.rowstore_change_s
                                               : pricing.elastic_resize_s;
  case ChangeKind::Pause:
  case ChangeKind::ReplicaRemove:
    return 0.0;
  }
  return 0.0;
}

TransitionEstimate transition_time_cost(const TransitionPlan& plan, const PricingCatalog& pricing,
                                        double warehouse_data_bytes) {
  std::array<double, kEngineCount> serial{};
  double moved = 0.0;
  for (const auto& m : plan.table_moves) {
    serial[engine_index(m.dest)] += m.bytes / pricing.export_rate_bps[engine_index(m.source)] +
                                    m.bytes / pricing.import_rate_bps[engine_index(m.dest)];
    moved += m.bytes;
  }
  for (const auto& c : plan.provisioning_changes) {
    serial[engine_index(c.engine)] += change_duration_s(c, pricing, warehouse_data_bytes);
  }
  return {*std::max_element(serial.begin(), serial.end()), moved * pricing.transfer_price_per_tb / kBytesPerTB};
}

double warehouse_data_bytes(const Blueprint& bp, const DatasetCatalog& catalog) {
  double bytes = 0.0;
  for (const auto& [table, engines] : bp.placement.placement) {
    if (engines.contains(EngineId::Warehouse) && catalog.contains(table)) bytes += catalog.table(table).bytes;
  }
  return bytes;
}

ProvisioningSet provisioning_set(const Blueprint& bp) {
  ProvisioningSet out{};
  for (auto e : kAllEngines) {
    out[engine_index(e)].engine = e;
    if (const auto* p = bp.provisioning(e); p != nullptr && bp.engines.contains(e)) out[engine_index(e)] = *p;
  }
  return out;
}

CandidateScorer::CandidateScorer(const Blueprint& current, const WorkloadWindow& workload,
                                 std::span<const QueryPrediction> predictions, const ScoringInputs& inputs)
    : workload_(workload), predictions_(predictions), inputs_(inputs), current_prov_(provisioning_set(current)) {
  if (predictions.size() != workload.queries.size()) {
    throw ConfigError("predictions must cover every workload query");
  }
  const auto& catalog = inputs.catalog;
  const auto& pricing = inputs.pricing;
  for (auto e : kAllEngines) current_vcpus_[engine_index(e)] = current_prov_[engine_index(e)].total_vcpus();
  current_warehouse_bytes_ = warehouse_data_bytes(current, catalog);

  tables_.resize(catalog.size());
  for (std::size_t t = 0; t < catalog.size(); ++t) {
    const auto& stats = catalog.tables()[t];
    auto& info = tables_[t];
    info.bytes = stats.bytes;
    info.rows = stats.row_count;
    if (auto it = current.placement.placement.find(stats.name); it != current.placement.placement.end()) {
      info.current_mask = it->second.bits();
    }
    EngineId writer = EngineId::RowStore;
    if (auto it = current.placement.writer.find(stats.name); it != current.placement.writer.end()) {
      writer = it->second;
    }
    for (auto e : kAllEngines) {
      const auto i = engine_index(e);
      info.storage_cost[i] = pricing.storage_rate(e, stats.name) * stats.row_count;
      info.move_time_s[i] = stats.bytes / pricing.export_rate_bps[engine_index(writer)] +
                            stats.bytes / pricing.import_rate_bps[i];
    }
  }

  auto tags = std::make_shared<std::vector<std::string>>();
  queries_.resize(workload.queries.size());
  for (std::size_t q = 0; q < workload.queries.size(); ++q) {
    const auto& wq = workload.queries[q];
    auto& info = queries_[q];
    info.rate = wq.arrival_rate_per_hour;
    info.runtime = predictions[q].runtime_s;
    info.bytes = predictions[q].bytes_scanned;
    info.capability_mask = inputs.caps.supporting(wq.query.capability_tokens).bits();
    for (const auto& t : wq.query.tables) {
      auto idx = catalog.index_of(t);
      if (!idx) throw UnknownTable("workload query references unknown table " + t);
      info.tables.push_back(static_cast<std::uint16_t>(*idx));
    }
    tags->push_back(wq.tag);
  }
  tags_ = std::move(tags);
}

CandidateScorer::Prepared CandidateScorer::prepare(const ProvisioningSet& provisionings) const {
  Prepared prep;
  prep.provisionings = provisionings;
  std::string key;
  std::uint8_t serving_mask = 0;
  for (auto e : kAllEngines) {
    const auto i = engine_index(e);
    const auto& p = provisionings[i];
    prep.serving[i] = p.serving();
    if (prep.serving[i]) serving_mask |= static_cast<std::uint8_t>(1u << i);
    if (e == EngineId::ScanService) {
      prep.runtime_factor[i] = 1.0;
    } else if (p.node_count > 0) {
      prep.runtime_factor[i] = adjust_for_provisioning(1.0, inputs_.models.provisioning[i], p.total_vcpus());
    } else {
      prep.runtime_factor[i] = kInf;
    }
    if (auto change = classify_change(e, current_prov_[i], p)) {
      prep.change_time_s[i] = change_duration_s(*change, inputs_.pricing, current_warehouse_bytes_);
    }
    prep.node_cost += inputs_.pricing.node_cost_per_hour(p);
    key += p.instance_type + ":" + std::to_string(p.node_count) + ":" + std::to_string(p.vcpus_per_node) + ";";
  }
  prep.hash_seed = fnv1a(key);
  prep.eligible.resize(queries_.size());
  for (std::size_t q = 0; q < queries_.size(); ++q) {
    prep.eligible[q] = queries_[q].capability_mask & serving_mask;
  }
  return prep;
}

std::vector<std::uint8_t> CandidateScorer::derive_placement(std::span<const std::int8_t> assignment) const {
  std::vector<std::uint8_t> masks(tables_.size(), static_cast<std::uint8_t>(1u << kRow));
  for (std::size_t q = 0; q < queries_.size() && q < assignment.size(); ++q) {
    if (assignment[q] < 0) continue;
    for (auto t : queries_[q].tables) masks[t] |= static_cast<std::uint8_t>(1u << assignment[q]);
  }
  return masks;
}

void CandidateScorer::score(const Prepared& prep, std::span<const std::int8_t> assignment,
                            VectorScore& out) const {
  // Derived placement built inline; a thread-local buffer keeps the hot loop
  // free of allocation.
  if (assignment.size() != queries_.size()) throw ConfigError("assignment must cover every workload query");
  thread_local std::vector<std::uint8_t> masks;
  masks.assign(tables_.size(), static_cast<std::uint8_t>(1u << kRow));
  for (std::size_t q = 0; q < queries_.size(); ++q) {
    if (assignment[q] < 0) continue;
    for (auto t : queries_[q].tables) masks[t] |= static_cast<std::uint8_t>(1u << assignment[q]);
  }
  score_impl(prep, assignment, masks, out);
}

VectorScore CandidateScorer::score(const Candidate& c) const {
  VectorScore out;
  score(prepare(c.provisionings), c.assignment, out);
  return out;
}

VectorScore CandidateScorer::score_with_placement(const Candidate& c,
                                                  std::span<const std::uint8_t> placement) const {
  if (placement.size() != tables_.size()) throw ConfigError("placement must cover every catalog table");
  VectorScore out;
  score_impl(prepare(c.provisionings), c.assignment, placement, out);
  return out;
}

void CandidateScorer::score_impl(const Prepared& prep, std::span<const std::int8_t> assignment,
                                 std::span<const std::uint8_t> placement, VectorScore& out) const {
  const auto& cfg = inputs_.config;
  const auto& load = inputs_.load;
  const std::size_t n = queries_.size();
  if (assignment.size() != n) throw ConfigError("assignment must cover every workload query");

  out.query_latencies.assign(n, 0.0);
  out.query_weights.assign(n, 0.0);
  out.query_tags = tags_;

  std::array<double, kEngineCount> cand_sum{}, weight_sum{};
  double rowstore_sum_at_current = 0.0;
  const int cur_row_vcpus = current_vcpus_[kRow];
  const int cand_row_vcpus = prep.provisionings[kRow].total_vcpus();
  const double current_row_factor =
      cur_row_vcpus > 0 ? adjust_for_provisioning(1.0, inputs_.models.provisioning[kRow], cur_row_vcpus)
                        : prep.runtime_factor[kRow];
  for (std::size_t q = 0; q < n; ++q) {
    const int e = assignment[q];
    if (e < 0) continue;
    const auto& info = queries_[q];
    if (!((prep.eligible[q] >> e) & 1u)) continue;
    cand_sum[e] += info.rate * info.runtime[e] * prep.runtime_factor[e];
    weight_sum[e] += info.rate;
    if (e == static_cast<int>(kRow)) rowstore_sum_at_current += info.rate * info.runtime[e] * current_row_factor;
  }

  const double txn_work = load.txn_work_s_per_hour;
  std::array<double, kEngineCount> wait{};
  for (std::size_t e : {kRow, kWarehouse}) {
    if (weight_sum[e] <= 0.0) continue;
    const auto& l = load.engines[e];
    double candidate = cand_sum[e];
    double observed = l.observed_runtime_s_per_hour;
    if (e == kRow) {
      candidate += cur_row_vcpus > 0 ? txn_work * cur_row_vcpus / cand_row_vcpus : txn_work;
      observed += txn_work;
    }
    const double rho = adjust_utilization(l.utilization, candidate, observed, cfg.fallback_constant);
    const double mean_p = cand_sum[e] / weight_sum[e];
    wait[e] = rho >= 1.0 - cfg.overload_epsilon ? kInf
                                                : queueing_delay(rho, mean_p, cfg.percentile, cfg.overload_epsilon);
  }

  for (std::size_t q = 0; q < n; ++q) {
    const int e = assignment[q];
    if (e < 0) continue;
    const auto& info = queries_[q];
    out.query_weights[q] = info.rate;
    bool ok = (prep.eligible[q] >> e) & 1u;
    for (auto t : info.tables) ok = ok && ((placement[t] >> e) & 1u);
    out.query_latencies[q] = ok ? info.runtime[e] * prep.runtime_factor[e] + wait[e] : kInf;
  }

  // Transactions run on RowStore only.
  if (cand_row_vcpus <= 0) {
    out.txn_latency = kInf;
  } else {
    const auto& row = load.engines[kRow];
    const double observed = row.observed_runtime_s_per_hour + txn_work;
    const double factor = observed > 0.0 ? (txn_work + rowstore_sum_at_current) / observed : 1.0;
    const double rho_t = adjust_txn_utilization(row.utilization, cur_row_vcpus > 0 ? cur_row_vcpus : cand_row_vcpus,
                                                cand_row_vcpus, factor);
    out.txn_latency = rho_t >= inputs_.models.txn.M ? kInf : txn_latency(rho_t, inputs_.models.txn);
  }

  double cost = prep.node_cost;
  const double scan_price = inputs_.pricing.scan_price_per_byte();
  for (std::size_t q = 0; q < n; ++q) {
    if (assignment[q] == static_cast<int>(kScan)) cost += queries_[q].rate * queries_[q].bytes * scan_price;
  }
  std::array<double, kEngineCount> serial = prep.change_time_s;
  double moved = 0.0;
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& info = tables_[t];
    const std::uint8_t added = placement[t] & static_cast<std::uint8_t>(~info.current_mask);
    for (std::size_t e = 0; e < kEngineCount; ++e) {
      if ((placement[t] >> e) & 1u) cost += info.storage_cost[e];
      if ((added >> e) & 1u) {
        serial[e] += info.move_time_s[e];
        moved += info.bytes;
      }
    }
  }
  out.operating_cost = cost;
  out.transition_time_s = *std::max_element(serial.begin(), serial.end());
  out.transition_cost = moved * inputs_.pricing.transfer_price_per_tb / kBytesPerTB;

  std::uint64_t h = prep.hash_seed;
  for (auto a : assignment) {
    h ^= static_cast<std::uint8_t>(a + 1);
    h *= 1099511628211ull;
  }
  for (auto m : placement) {
    h ^= m;
    h *= 1099511628211ull;
  }
  out.blueprint_hash = mix64(h);
}

Blueprint CandidateScorer::materialize(const Candidate& c) const {
  Blueprint bp;
  bp.engines = EngineSet::all();
  for (auto e : kAllEngines) bp.provisionings[e] = c.provisionings[engine_index(e)];
  const auto masks = derive_placement(c.assignment);
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& name = inputs_.catalog.tables()[t].name;
    bp.placement.placement[name] = EngineSet{masks[t]};
    bp.placement.writer[name] = EngineId::RowStore;
  }
  for (std::size_t q = 0; q < queries_.size(); ++q) {
    if (c.assignment[q] >= 0) {
      bp.routing.assignments[workload_.queries[q].query_id] = static_cast<EngineId>(c.assignment[q]);
    }
  }
  return bp;
}

Candidate CandidateScorer::candidate_from(const Blueprint& bp) const {
  Candidate c;
  c.provisionings = provisioning_set(bp);
  c.assignment.assign(queries_.size(), -1);
  for (std::size_t q = 0; q < queries_.size(); ++q) {
    auto it = bp.routing.assignments.find(workload_.queries[q].query_id);
    if (it != bp.routing.assignments.end()) c.assignment[q] = static_cast<std::int8_t>(engine_index(it->second));
  }
  return c;
}

std::vector<std::uint8_t> CandidateScorer::placement_masks(const Blueprint& bp) const {
  std::vector<std::uint8_t> masks(tables_.size(), 0);
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const auto& name = inputs_.catalog.tables()[t].name;
    if (auto it = bp.placement.placement.find(name); it != bp.placement.placement.end()) {
      masks[t] = it->second.bits();
    }
  }
  return masks;
}

VectorScore score_blueprint(const Blueprint& candidate, const Blueprint& current, const WorkloadWindow& w,
                            std::span<const QueryPrediction> predictions, const ScoringInputs& inputs) {
  CandidateScorer scorer(current, w, predictions, inputs);
  auto score = scorer.score_with_placement(scorer.candidate_from(candidate), scorer.placement_masks(candidate));
  score.blueprint_hash = candidate.hash();
  return score;
}

} // namespace blueprintd

#include "blueprintd/ground_truth.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"
#include "blueprintd/scoring.hpp"
#include "blueprintd/selectivity.hpp"

#include <algorithm>
#include <cmath>

namespace blueprintd {

nlohmann::json GroundTruthParams::to_json() const {
  nlohmann::json prov = nlohmann::json::object();
  for (auto e : kAllEngines) prov[std::string(to_string(e))] = provisioning[engine_index(e)].to_json();
  return {{"row_fixed_s", row_fixed_s},
          {"row_per_row_s", row_per_row_s},
          {"warehouse_fixed_s", warehouse_fixed_s},
          {"warehouse_per_row_s", warehouse_per_row_s},
          {"scan_fixed_s", scan_fixed_s},
          {"scan_bytes_per_s", scan_bytes_per_s},
          {"row_join_factor", row_join_factor},
          {"warehouse_join_factor", warehouse_join_factor},
          {"jitter", jitter},
          {"seed", seed},
          {"provisioning", prov},
          {"txn", txn.to_json()}};
}

GroundTruthParams GroundTruthParams::from_json(const nlohmann::json& doc) {
  GroundTruthParams p;
  try {
    p.row_fixed_s = doc.value("row_fixed_s", p.row_fixed_s);
    p.row_per_row_s = doc.value("row_per_row_s", p.row_per_row_s);
    p.warehouse_fixed_s = doc.value("warehouse_fixed_s", p.warehouse_fixed_s);
    p.warehouse_per_row_s = doc.value("warehouse_per_row_s", p.warehouse_per_row_s);
    p.scan_fixed_s = doc.value("scan_fixed_s", p.scan_fixed_s);
    p.scan_bytes_per_s = doc.value("scan_bytes_per_s", p.scan_bytes_per_s);
    p.row_join_factor = doc.value("row_join_factor", p.row_join_factor);
    p.warehouse_join_factor = doc.value("warehouse_join_factor", p.warehouse_join_factor);
    p.jitter = doc.value("jitter", p.jitter);
    p.seed = doc.value("seed", p.seed);
    if (doc.contains("provisioning")) {
      for (const auto& [name, c] : doc.at("provisioning").items()) {
        p.provisioning[engine_index(engine_from_string(name))] = ProvisioningConstants::from_json(c);
      }
    }
    if (doc.contains("txn")) p.txn = TxnModelConstants::from_json(doc.at("txn"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("ground truth: ") + e.what());
  }
  const bool positive = p.row_fixed_s > 0 && p.row_per_row_s >= 0 && p.warehouse_fixed_s > 0 &&
                        p.warehouse_per_row_s >= 0 && p.scan_fixed_s > 0 && p.scan_bytes_per_s > 0 &&
                        p.jitter >= 0 && p.row_join_factor >= 0 && p.warehouse_join_factor >= 0;
  if (!positive) throw ConfigError("ground truth parameters out of range");
  return p;
}

EngineGroundTruth::EngineGroundTruth(DatasetCatalog catalog, GroundTruthParams params)
    : catalog_(std::move(catalog)), params_(params) {}

double EngineGroundTruth::runtime_s(const LogicalQuery& q, EngineId e) const {
  const double joins = static_cast<double>(q.join_predicates.size());
  double base = 0.0;
  switch (e) {
  case EngineId::RowStore: {
    double card = 0.0;
    for (double c : scan_cardinalities(q, catalog_)) card += c;
    base = params_.row_fixed_s + params_.row_per_row_s * card * (1.0 + params_.row_join_factor * joins);
    break;
  }
  case EngineId::Warehouse: {
    double rows = 0.0;
    for (const auto& t : q.tables) rows += catalog_.table(t).row_count;
    base = params_.warehouse_fixed_s +
           params_.warehouse_per_row_s * rows * (1.0 + params_.warehouse_join_factor * joins);
    break;
  }
  case EngineId::ScanService:
    base = params_.scan_fixed_s + bytes_scanned(q) / params_.scan_bytes_per_s;
    break;
  }
  std::uint64_t h = fnv1a(render_query(q), mix64(params_.seed));
  h = fnv1a(to_string(e), h);
  const double spread = params_.jitter * (2.0 * unit_interval(h) - 1.0);
  return base * std::exp(spread);
}

double EngineGroundTruth::bytes_scanned(const LogicalQuery& q) const {
  double bytes = 0.0;
  for (const auto& t : q.tables) bytes += catalog_.table(t).bytes;
  return bytes;
}

double EngineGroundTruth::runtime_on(const LogicalQuery& q, EngineId e, int vcpus) const {
  const double g = runtime_s(q, e);
  if (e == EngineId::ScanService) return g;
  return adjust_for_provisioning(g, params_.provisioning[engine_index(e)], std::max(1, vcpus));
}

double EngineGroundTruth::txn_latency_at(double utilization) const {
  const auto& c = params_.txn;
  // Saturation: hold the latency at 1% headroom below the pole.
  const double rho = std::min(utilization, c.M * 0.99);
  return c.a / (c.M - rho) + c.b;
}

} // namespace blueprintd

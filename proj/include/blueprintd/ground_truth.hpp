#pragma once

#include "blueprintd/catalog.hpp"
#include "blueprintd/fitting.hpp"
#include "blueprintd/predictor.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>

namespace blueprintd {

/// Generative parameters of the synthetic engines.
struct GroundTruthParams {
  // RowStore: fixed + per-row cost over estimated scan cardinality.
  double row_fixed_s = 0.01;
  double row_per_row_s = 2e-6;
  // Warehouse: fixed + per-row cost over full table rows.
  double warehouse_fixed_s = 1.0;
  double warehouse_per_row_s = 2e-8;
  // ScanService: fixed + bytes at a scan rate.
  double scan_fixed_s = 2.0;
  double scan_bytes_per_s = 1073741824.0;
  /// Each join multiplies RowStore work by (1 + row_join_factor) and
  /// Warehouse work by (1 + warehouse_join_factor).
  double row_join_factor = 2.0;
  double warehouse_join_factor = 0.25;
  /// Deterministic per (query, engine) log-uniform spread: factor in
  /// [exp(-jitter), exp(jitter)].
  double jitter = 0.15;
  std::uint64_t seed = 1;

  std::array<ProvisioningConstants, kEngineCount> provisioning{
      ProvisioningConstants{0.8, 0.2, 4, 0.0}, ProvisioningConstants{0.9, 0.1, 4, 0.0},
      ProvisioningConstants{0.0, 1.0, 1, 0.0}};
  TxnModelConstants txn{0.003, 0.004, 1.0, 0.0};

  nlohmann::json to_json() const;
  static GroundTruthParams from_json(const nlohmann::json& doc);
};

/// Synthetic engines: run time at base provisioning and bytes scanned are
/// pure functions of the query text, the catalog and the parameters.
class EngineGroundTruth final : public GroundTruthSource {
public:
  EngineGroundTruth(DatasetCatalog catalog, GroundTruthParams params);

  double runtime_s(const LogicalQuery& q, EngineId e) const override;
  double bytes_scanned(const LogicalQuery& q) const override;

  /// Run time on a provisioning with `vcpus` total vCPUs.
  double runtime_on(const LogicalQuery& q, EngineId e, int vcpus) const;
  /// Transaction latency at RowStore utilization rho, capped near the pole.
  double txn_latency_at(double utilization) const;

  const GroundTruthParams& params() const noexcept { return params_; }
  const DatasetCatalog& catalog() const noexcept { return catalog_; }

private:
  DatasetCatalog catalog_;
  GroundTruthParams params_;
};

} // namespace blueprintd

#pragma once

#include <json.hpp>

#include <span>

namespace blueprintd {

/// Run time on d vCPUs is (c1 * base_vcpus / d + c2) * G, where G is the run
/// time on base_vcpus.
struct ProvisioningConstants {
  double c1 = 0.0;
  double c2 = 1.0;
  int base_vcpus = 1;
  double residual = 0.0; // sum of squared errors of the fit

  nlohmann::json to_json() const;
  static ProvisioningConstants from_json(const nlohmann::json& doc);
};

/// Transaction latency a / (M - rho) + b, defined for rho < M.
struct TxnModelConstants {
  double a = 0.0;
  double b = 0.0;
  double M = 1.0;
  double residual = 0.0;

  nlohmann::json to_json() const;
  static TxnModelConstants from_json(const nlohmann::json& doc);
};

struct ProvisioningObservation {
  double base_runtime_s = 0.0; // G
  int dest_vcpus = 1;
  double runtime_s = 0.0;
};

struct TxnObservation {
  double utilization = 0.0;
  double latency_s = 0.0;
};

/// Least squares without intercept via the 2x2 normal equations.
/// Throws DegenerateDesign unless at least two distinct vCPU counts appear.
ProvisioningConstants fit_provisioning_constants(std::span<const ProvisioningObservation> obs,
                                                 int base_vcpus);

inline constexpr double kTxnGridMax = 2.0;
inline constexpr double kTxnGridStep = 1e-3;

/// Grid search over M in (max rho, 2] with closed-form (a, b) per M; a is
/// held at zero when the unconstrained slope is negative. Needs three
/// distinct utilizations below 1.
TxnModelConstants fit_txn_model(std::span<const TxnObservation> obs);

} // namespace blueprintd

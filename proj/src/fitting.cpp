#include "blueprintd/fitting.hpp"

#include "blueprintd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace blueprintd {

nlohmann::json ProvisioningConstants::to_json() const {
  return {{"c1", c1}, {"c2", c2}, {"base_vcpus", base_vcpus}, {"residual", residual}};
}

ProvisioningConstants ProvisioningConstants::from_json(const nlohmann::json& doc) {
  ProvisioningConstants c;
  try {
    c.c1 = doc.at("c1").get<double>();
    c.c2 = doc.at("c2").get<double>();
    c.base_vcpus = doc.at("base_vcpus").get<int>();
    c.residual = doc.value("residual", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("provisioning constants: ") + e.what());
  }
  if (c.base_vcpus <= 0 || !(c.c1 + c.c2 > 0.0)) throw ConfigError("provisioning constants out of range");
  return c;
}

nlohmann::json TxnModelConstants::to_json() const {
  return {{"a", a}, {"b", b}, {"M", M}, {"residual", residual}};
}

TxnModelConstants TxnModelConstants::from_json(const nlohmann::json& doc) {
  TxnModelConstants c;
  try {
    c.a = doc.at("a").get<double>();
    c.b = doc.at("b").get<double>();
    c.M = doc.at("M").get<double>();
    c.residual = doc.value("residual", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("txn model: ") + e.what());
  }
  if (!(c.M > 0.0) || c.a < 0.0) throw ConfigError("txn model constants out of range");
  return c;
}

ProvisioningConstants fit_provisioning_constants(std::span<const ProvisioningObservation> obs,
                                                 int base_vcpus) {
  if (base_vcpus <= 0) throw DegenerateDesign("base_vcpus must be positive");
  std::set<int> distinct;
  for (const auto& o : obs) {
    if (o.dest_vcpus <= 0) throw DegenerateDesign("observation with non-positive vCPUs");
    distinct.insert(o.dest_vcpus);
  }
  if (distinct.size() < 2) throw DegenerateDesign("need observations at two or more vCPU counts");

  // Regressors x1 = (b/d) G, x2 = G.
  long double s11 = 0, s12 = 0, s22 = 0, r1 = 0, r2 = 0;
  for (const auto& o : obs) {
    const long double x1 = static_cast<long double>(base_vcpus) / o.dest_vcpus * o.base_runtime_s;
    const long double x2 = o.base_runtime_s;
    s11 += x1 * x1;
    s12 += x1 * x2;
    s22 += x2 * x2;
    r1 += x1 * o.runtime_s;
    r2 += x2 * o.runtime_s;
  }
  const long double det = s11 * s22 - s12 * s12;
  if (!(std::fabs(det) > 1e-18L * s11 * s22)) throw DegenerateDesign("singular normal equations");

  ProvisioningConstants c;
  c.base_vcpus = base_vcpus;
  c.c1 = static_cast<double>((r1 * s22 - r2 * s12) / det);
  c.c2 = static_cast<double>((s11 * r2 - s12 * r1) / det);
  for (const auto& o : obs) {
    const double pred = (c.c1 * base_vcpus / o.dest_vcpus + c.c2) * o.base_runtime_s;
    c.residual += (o.runtime_s - pred) * (o.runtime_s - pred);
  }
  return c;
}

namespace {

struct LineFit {
  double slope;
  double intercept;
  double sse;
};

/// y = slope * x + intercept with slope >= 0.
LineFit fit_line(std::span<const TxnObservation> obs, double M) {
  const double n = static_cast<double>(obs.size());
  double sx = 0, sy = 0;
  for (const auto& o : obs) {
    sx += 1.0 / (M - o.utilization);
    sy += o.latency_s;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& o : obs) {
    const double dx = 1.0 / (M - o.utilization) - mx;
    sxx += dx * dx;
    sxy += dx * (o.latency_s - my);
  }
  double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (slope < 0.0) slope = 0.0;
  const double intercept = my - slope * mx;
  double sse = 0;
  for (const auto& o : obs) {
    const double e = o.latency_s - (slope / (M - o.utilization) + intercept);
    sse += e * e;
  }
  return {slope, intercept, sse};
}

} // namespace

TxnModelConstants fit_txn_model(std::span<const TxnObservation> obs) {
  std::set<double> distinct;
  double max_rho = -std::numeric_limits<double>::infinity();
  for (const auto& o : obs) {
    if (!(o.utilization >= 0.0 && o.utilization < 1.0)) {
      throw DegenerateDesign("transaction utilization must lie in [0, 1)");
    }
    distinct.insert(o.utilization);
    max_rho = std::max(max_rho, o.utilization);
  }
  if (obs.size() < 3 || distinct.size() < 3) {
    throw DegenerateDesign("need three or more distinct utilizations");
  }

  TxnModelConstants best;
  best.residual = std::numeric_limits<double>::infinity();
  // M_j = max_rho + j * step, computed from j to avoid drift.
  for (long j = 1;; ++j) {
    const double M = max_rho + static_cast<double>(j) * kTxnGridStep;
    if (M > kTxnGridMax + 1e-12) break;
    const auto fit = fit_line(obs, M);
    if (fit.sse < best.residual) best = {fit.slope, fit.intercept, M, fit.sse};
  }
  return best;
}

} // namespace blueprintd

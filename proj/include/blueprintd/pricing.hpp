#pragma once

#include "blueprintd/engine.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blueprintd {

struct Provisioning;

// Sizes are binary: MB = 2^20 bytes, TB = 2^40 bytes.
inline constexpr double kBytesPerMB = 1048576.0;
inline constexpr double kBytesPerGB = kBytesPerMB * 1024.0;
inline constexpr double kBytesPerTB = kBytesPerGB * 1024.0;

struct InstanceType {
  std::string name;
  int vcpus = 1;
  double price_per_hour = 0.0; // per node
};

/// Prices and transition rates. Instance lists are ordered from smallest to
/// largest; the order defines the provisioning lattice.
struct PricingCatalog {
  std::array<std::vector<InstanceType>, kEngineCount> instances;
  double scan_price_per_tb = 5.0;
  /// Per engine: table -> $/row/hour, with "*" as the engine default.
  std::array<std::map<std::string, double>, kEngineCount> storage_per_row_hour;
  std::array<double, kEngineCount> export_rate_bps{};
  std::array<double, kEngineCount> import_rate_bps{};
  double rowstore_change_s = 300.0;
  double elastic_resize_s = 900.0;
  double classic_resize_bps = 18.0 * kBytesPerMB;
  double transfer_price_per_tb = 0.0;

  std::span<const InstanceType> instances_of(EngineId e) const { return instances[engine_index(e)]; }
  /// Throws UnknownPrice.
  const InstanceType& instance(EngineId e, std::string_view name) const;
  std::optional<std::size_t> instance_index(EngineId e, std::string_view name) const;

  /// Node-hour price of a provisioning; zero when paused or serverless.
  double node_cost_per_hour(const Provisioning& p) const;
  double scan_price_per_byte() const { return scan_price_per_tb / kBytesPerTB; }
  double storage_rate(EngineId e, std::string_view table) const;

  static PricingCatalog from_json(const nlohmann::json& doc);
  static PricingCatalog load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

} // namespace blueprintd

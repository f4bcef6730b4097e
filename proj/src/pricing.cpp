#include "blueprintd/pricing.hpp"

#include "blueprintd/blueprint.hpp"
#include "blueprintd/errors.hpp"

#include <fstream>

namespace blueprintd {

const InstanceType& PricingCatalog::instance(EngineId e, std::string_view name) const {
  for (const auto& it : instances[engine_index(e)]) {
    if (it.name == name) return it;
  }
  throw UnknownPrice("no price for " + std::string(to_string(e)) + " instance '" + std::string(name) + "'");
}

std::optional<std::size_t> PricingCatalog::instance_index(EngineId e, std::string_view name) const {
  const auto& list = instances[engine_index(e)];
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].name == name) return i;
  }
  return std::nullopt;
}

double PricingCatalog::node_cost_per_hour(const Provisioning& p) const {
  if (p.engine == EngineId::ScanService || p.node_count == 0) return 0.0;
  return instance(p.engine, p.instance_type).price_per_hour * p.node_count;
}

double PricingCatalog::storage_rate(EngineId e, std::string_view table) const {
  const auto& rates = storage_per_row_hour[engine_index(e)];
  if (auto it = rates.find(std::string(table)); it != rates.end()) return it->second;
  if (auto it = rates.find("*"); it != rates.end()) return it->second;
  return 0.0;
}

namespace {

using nlohmann::json;

/// Accepts either one number for all engines or an engine-keyed object.
std::array<double, kEngineCount> per_engine(const json& j, std::string_view field) {
  std::array<double, kEngineCount> out{};
  if (j.is_number()) {
    out.fill(j.get<double>());
  } else {
    for (const auto& [name, v] : j.items()) out[engine_index(engine_from_string(name))] = v.get<double>();
  }
  for (std::size_t i = 0; i < kEngineCount; ++i) {
    if (!(out[i] > 0.0)) {
      throw ConfigError(std::string(field) + " must be positive for " +
                        std::string(to_string(kAllEngines[i])));
    }
  }
  return out;
}

json engine_map(const std::array<double, kEngineCount>& values) {
  json j = json::object();
  for (auto e : kAllEngines) j[std::string(to_string(e))] = values[engine_index(e)];
  return j;
}

} // namespace

PricingCatalog PricingCatalog::from_json(const json& doc) {
  PricingCatalog p;
  try {
    for (const auto& [name, list] : doc.at("instance_prices").items()) {
      auto& dst = p.instances[engine_index(engine_from_string(name))];
      for (const auto& it : list) {
        InstanceType t{it.at("name").get<std::string>(), it.at("vcpus").get<int>(),
                       it.at("price_per_hour").get<double>()};
        if (t.vcpus <= 0 || !(t.price_per_hour > 0.0)) throw ConfigError("invalid instance " + t.name);
        dst.push_back(std::move(t));
      }
    }
    p.scan_price_per_tb = doc.at("scan_price_per_tb").get<double>();
    for (const auto& [name, v] : doc.at("storage_per_row_hour").items()) {
      auto& dst = p.storage_per_row_hour[engine_index(engine_from_string(name))];
      if (v.is_number()) {
        dst["*"] = v.get<double>();
      } else {
        for (const auto& [table, rate] : v.items()) dst[table] = rate.get<double>();
      }
    }
    p.export_rate_bps = per_engine(doc.at("export_rate_bps"), "export_rate_bps");
    p.import_rate_bps = per_engine(doc.at("import_rate_bps"), "import_rate_bps");
    p.rowstore_change_s = doc.at("rowstore_change_s").get<double>();
    p.elastic_resize_s = doc.at("elastic_resize_s").get<double>();
    p.classic_resize_bps = doc.at("classic_resize_bps").get<double>();
    p.transfer_price_per_tb = doc.value("transfer_price_per_tb", 0.0);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pricing: ") + e.what());
  }
  if (!(p.scan_price_per_tb > 0.0) || !(p.rowstore_change_s > 0.0) || !(p.elastic_resize_s > 0.0) ||
      !(p.classic_resize_bps > 0.0) || p.transfer_price_per_tb < 0.0) {
    throw ConfigError("pricing: rates must be positive");
  }
  if (p.instances[engine_index(EngineId::RowStore)].empty()) {
    throw ConfigError("pricing: RowStore needs at least one instance type");
  }
  return p;
}

PricingCatalog PricingCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pricing file " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("pricing: " + std::string(e.what()));
  }
}

json PricingCatalog::to_json() const {
  json prices = json::object();
  json storage = json::object();
  for (auto e : kAllEngines) {
    json list = json::array();
    for (const auto& it : instances[engine_index(e)]) {
      list.push_back({{"name", it.name}, {"vcpus", it.vcpus}, {"price_per_hour", it.price_per_hour}});
    }
    if (!list.empty()) prices[std::string(to_string(e))] = list;
    json rates = json::object();
    for (const auto& [t, r] : storage_per_row_hour[engine_index(e)]) rates[t] = r;
    storage[std::string(to_string(e))] = rates;
  }
  return {{"instance_prices", prices},
          {"scan_price_per_tb", scan_price_per_tb},
          {"storage_per_row_hour", storage},
          {"export_rate_bps", engine_map(export_rate_bps)},
          {"import_rate_bps", engine_map(import_rate_bps)},
          {"rowstore_change_s", rowstore_change_s},
          {"elastic_resize_s", elastic_resize_s},
          {"classic_resize_bps", classic_resize_bps},
          {"transfer_price_per_tb", transfer_price_per_tb}};
}

} // namespace blueprintd

#pragma once

#include "blueprintd/blueprint.hpp"
#include "blueprintd/catalog.hpp"
#include "blueprintd/harness.hpp"
#include "blueprintd/workload.hpp"

#include <initializer_list>
#include <string>
#include <tuple>
#include <vector>

namespace fixtures {

using namespace blueprintd;

struct ColumnSpec {
  std::string name;
  double lo = 0.0;
  double hi = 100.0;
  double distinct = 100.0;
};

inline TableStats table(std::string name, double rows, double bytes, std::initializer_list<ColumnSpec> cols) {
  TableStats t{std::move(name), rows, bytes, {}};
  for (const auto& c : cols) t.columns[c.name] = Histogram::uniform(c.lo, c.hi, rows, c.distinct);
  return t;
}

/// Tables a, b, t with numeric columns id, x, y and e.
inline DatasetCatalog small_catalog() {
  std::vector<TableStats> tables;
  for (const char* name : {"a", "b", "t"}) {
    tables.push_back(table(name, 1000.0, 1e6,
                           {{"id", 0, 1000, 1000}, {"x", 0, 100, 100}, {"y", 0, 10, 10}, {"e", 0, 1, 1}}));
  }
  return DatasetCatalog(std::move(tables));
}

inline Provisioning prov(EngineId e, std::string type, int nodes, int vcpus) {
  return Provisioning{e, std::move(type), nodes, vcpus};
}

/// All three engines, RowStore as writer of everything, every table on the
/// engines listed in `placed`.
inline Blueprint blueprint(const DatasetCatalog& cat, EngineSet placed, int warehouse_nodes = 2) {
  Blueprint bp;
  bp.engines = EngineSet::all();
  bp.provisionings[EngineId::RowStore] = prov(EngineId::RowStore, "rs.large", 1, 2);
  bp.provisionings[EngineId::Warehouse] = prov(EngineId::Warehouse, "dc2.large", warehouse_nodes, 2);
  bp.provisionings[EngineId::ScanService] = Provisioning{EngineId::ScanService, "", 0, 1};
  for (const auto& t : cat.tables()) {
    bp.placement.placement[t.name] = placed;
    bp.placement.writer[t.name] = EngineId::RowStore;
  }
  return bp;
}

inline CapabilityConfig vector_caps() {
  CapabilityConfig caps;
  caps.keywords["<=>"] = EngineSet{EngineId::RowStore};
  return caps;
}

} // namespace fixtures

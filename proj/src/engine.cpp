#include "blueprintd/engine.hpp"

#include "blueprintd/errors.hpp"
#include "blueprintd/hash.hpp"

#include <cstdio>

namespace blueprintd {

std::string_view to_string(EngineId e) noexcept {
  switch (e) {
  case EngineId::RowStore:
    return "RowStore";
  case EngineId::Warehouse:
    return "Warehouse";
  case EngineId::ScanService:
    return "ScanService";
  }
  return "?";
}

EngineId engine_from_string(std::string_view name) {
  for (auto e : kAllEngines) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown engine '" + std::string(name) + "'");
}

std::vector<EngineId> EngineSet::members() const {
  std::vector<EngineId> out;
  for (auto e : kAllEngines) {
    if (contains(e)) out.push_back(e);
  }
  return out;
}

std::string to_string(EngineSet s) {
  std::string out = "{";
  bool first = true;
  for (auto e : s.members()) {
    if (!first) out += ",";
    out += to_string(e);
    first = false;
  }
  return out + "}";
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

} // namespace blueprintd

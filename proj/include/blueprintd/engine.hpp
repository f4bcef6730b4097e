#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace blueprintd {

/// The three engines of the managed infrastructure. RowStore is the only
/// transactional engine; ScanService is serverless and never provisioned.
enum class EngineId : std::uint8_t { RowStore = 0, Warehouse = 1, ScanService = 2 };

inline constexpr std::size_t kEngineCount = 3;
inline constexpr std::array<EngineId, kEngineCount> kAllEngines{
    EngineId::RowStore, EngineId::Warehouse, EngineId::ScanService};

constexpr std::size_t engine_index(EngineId e) noexcept {
  return static_cast<std::size_t>(e);
}

std::string_view to_string(EngineId e) noexcept;

/// Throws ConfigError for unknown names.
EngineId engine_from_string(std::string_view name);

/// Small value set over the three engines.
class EngineSet {
public:
  constexpr EngineSet() = default;
  constexpr explicit EngineSet(std::uint8_t bits) : bits_(bits & 0x7u) {}
  constexpr EngineSet(std::initializer_list<EngineId> engines) {
    for (auto e : engines) insert(e);
  }

  static constexpr EngineSet all() { return EngineSet{std::uint8_t{0x7}}; }

  constexpr bool contains(EngineId e) const noexcept {
    return (bits_ >> engine_index(e)) & 1u;
  }
  constexpr void insert(EngineId e) noexcept {
    bits_ = static_cast<std::uint8_t>(bits_ | (1u << engine_index(e)));
  }
  constexpr void erase(EngineId e) noexcept {
    bits_ = static_cast<std::uint8_t>(bits_ & ~(1u << engine_index(e)));
  }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr std::size_t size() const noexcept {
    return (bits_ & 1u) + ((bits_ >> 1) & 1u) + ((bits_ >> 2) & 1u);
  }
  constexpr std::uint8_t bits() const noexcept { return bits_; }

  constexpr EngineSet operator&(EngineSet o) const {
    return EngineSet{static_cast<std::uint8_t>(bits_ & o.bits_)};
  }
  constexpr EngineSet operator|(EngineSet o) const {
    return EngineSet{static_cast<std::uint8_t>(bits_ | o.bits_)};
  }
  constexpr bool operator==(const EngineSet&) const = default;

  /// Members in enum order.
  std::vector<EngineId> members() const;

private:
  std::uint8_t bits_ = 0;
};

std::string to_string(EngineSet s);

} // namespace blueprintd

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace blueprintd {

// FNV-1a; stable across platforms and runs, unlike std::hash.
inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;

constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t seed = kFnvOffset) noexcept {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

/// Maps a hash to [0, 1).
constexpr double unit_interval(std::uint64_t h) noexcept {
  return static_cast<double>(mix64(h) >> 11) * 0x1.0p-53;
}

std::string to_hex(std::uint64_t value);

} // namespace blueprintd

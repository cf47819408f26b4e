// Seed derivation helpers. Every randomized component takes a seed derived
// from a master seed plus a salt string, so whole runs replay bit-for-bit.
#pragma once

#include <cstdint>
#include <string_view>

namespace mlab {

// SplitMix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Sub-seed for a named role within a run.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view salt) {
  return splitmix64(base ^ fnv1a64(salt));
}

}  // namespace mlab

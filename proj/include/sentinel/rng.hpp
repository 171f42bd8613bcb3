#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sentinel {

using Rng = std::mt19937_64;

/// Independent generator for a named substream of a run seed.
inline Rng make_rng(std::uint64_t seed, std::string_view stream) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : stream) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

}  // namespace sentinel

#pragma once

#include <cstdint>
#include <random>

namespace kpirefine {

// Independent generator for (seed, stream). Streams are keyed by epoch index
// so results never depend on the order in which epochs are processed.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace kpirefine

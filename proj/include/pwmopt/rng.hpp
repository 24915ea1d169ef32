#pragma once

#include <cstdint>
#include <random>

namespace pwmopt {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based seed for stream (master, stream, index). Training uses
/// stream = epoch and index = rollout; evaluation uses kEvalStream and the
/// episode index. Seeds depend only on the triple, never on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) {
  return mix64(mix64(mix64(master) ^ stream) ^ index);
}

inline constexpr std::uint64_t kEvalStream = 0xE7A1'0000'0000'0000ULL;
inline constexpr std::uint64_t kInitStream = 0x1A17'0000'0000'0000ULL;

}  // namespace pwmopt

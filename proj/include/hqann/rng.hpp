#pragma once

#include <cstdint>

namespace hqann {

/// splitmix64 finalizer; turns correlated seeds (seed ^ id) into
/// well-spread engine seeds for std::mt19937_64.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream salts so feature and attribute draws for one point are independent.
inline constexpr std::uint64_t kFeatureStream = 0x0;
inline constexpr std::uint64_t kAttributeStream = 0xA77A77A77A77A77AULL;
inline constexpr std::uint64_t kQueryStream = 0x5EED5EED00000000ULL;

}  // namespace hqann

#ifndef RFIC_RANDOM_H_
#define RFIC_RANDOM_H_

#include <cstdint>
#include <random>

namespace rfic {

// SplitMix64 finaliser; turns (seed, stream) into an independent sub-seed.
inline std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

}  // namespace rfic

#endif  // RFIC_RANDOM_H_

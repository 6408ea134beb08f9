#pragma once

#include <cstdint>
#include <random>

namespace treerl {

// splitmix64 over (seed, stream), used to derive independent substream seeds
// from a single run seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// One generator per concern so that, e.g., drawing an extra policy sample
// does not shift the epoch shuffle order.
struct RngStreams {
  std::mt19937_64 init;
  std::mt19937_64 shuffle;
  std::mt19937_64 policy;

  explicit RngStreams(std::uint64_t seed)
      : init(split_seed(seed, 0)),
        shuffle(split_seed(seed, 1)),
        policy(split_seed(seed, 2)) {}
};

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace treerl

#pragma once

#include <cstdint>
#include <random>

namespace lossres {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator for replication `stream` of a run seeded with `base_seed`.
/// Streams are decorrelated by hashing, so replication k never depends on
/// how many draws replication k-1 consumed.
inline Rng stream_rng(std::uint64_t base_seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(base_seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

/// Uniform draw on the open interval (0, 1) from the top 53 bits.
inline double open_uniform(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace lossres

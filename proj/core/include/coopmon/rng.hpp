#pragma once

#include <cstdint>
#include <random>

namespace coopmon {

using Rng = std::mt19937_64;

/// Independent sub-stream seeds derived from a base seed. Keeps e.g. crowd
/// generation unaffected by how many robots are spawned.
enum class Stream : std::uint64_t {
  Map = 1,
  Crowd = 2,
  Spawn = 3,
  SensorNoise = 4,
  Planner = 5,
  Episode = 6,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  return splitmix64(splitmix64(base) ^ (salt * 0xd1b54a32d192ed03ULL));
}

inline Rng make_rng(std::uint64_t base, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(derive_seed(base, static_cast<std::uint64_t>(stream)), index));
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline double gaussian(Rng& rng, double mean, double stddev) {
  if (stddev == 0.0) return mean;
  return std::normal_distribution<double>(mean, stddev)(rng);
}

}  // namespace coopmon

#pragma once

#include <cmath>
#include <cstdint>

namespace sb::rng {

// Counter-based generation: every variate is a pure function of
// (seed, stream, key1, key2).  Grids, bond clocks and replicas are
// therefore reproducible site-by-site, can be regenerated lazily, and
// replicas parallelize without shared state.

enum class Stream : std::uint64_t {
  quadrant = 1,
  wedge = 2,
  clock = 3,
  occupancy = 4,
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Maps a signed index to an unsigned word so negative lattice/bond
// coordinates key distinct variates.
inline std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

inline std::uint64_t hash(std::uint64_t seed, Stream stream, std::uint64_t replica,
                          std::uint64_t k1, std::uint64_t k2) {
  std::uint64_t h = mix64(seed ^ 0x8f1bbcdcbfa53e0bULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(stream) + (replica << 8)));
  h = mix64(h ^ k1);
  h = mix64(h ^ k2);
  return h;
}

// Uniform on the open interval (0,1); never returns 0 or 1, so
// -log(u) is strictly positive and finite.
inline double to_unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

inline double uniform(std::uint64_t seed, Stream stream, std::uint64_t replica,
                      std::uint64_t k1, std::uint64_t k2) {
  return to_unit(hash(seed, stream, replica, k1, k2));
}

// Mean-1 exponential variate.
inline double exponential(std::uint64_t seed, Stream stream, std::uint64_t replica,
                          std::uint64_t k1, std::uint64_t k2) {
  return -std::log(uniform(seed, stream, replica, k1, k2));
}

}  // namespace sb::rng

#pragma once

#include <cmath>
#include <cstdint>

#include "vecurve/common.hpp"

// Reproducible random number generation.
//
// The library fixes its generator so that outputs are bit-identical across
// platforms and degrees of parallelism within a release:
//   * stream derivation: SplitMix64 applied to a chained key, so a substream
//     for (base_seed, scenario, replicate, subject) is independent of the
//     order in which substreams are created or consumed;
//   * engine: xoshiro256++ 1.0 (Blackman & Vigna), state filled by SplitMix64.
// Draws use explicit inverse-CDF conversions rather than std:: distributions,
// whose output is implementation-defined.

namespace vecurve {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Collapses a key tuple into one 64-bit stream id. Each component is mixed
// through SplitMix64 so that nearby keys give unrelated streams.
inline std::uint64_t derive_stream(std::uint64_t base_seed,
                                   std::uint64_t k1 = 0,
                                   std::uint64_t k2 = 0,
                                   std::uint64_t k3 = 0) {
  std::uint64_t s = base_seed;
  std::uint64_t h = splitmix64(s);
  s ^= k1 + 0x9E3779B97F4A7C15ULL;
  h ^= splitmix64(s);
  s ^= k2 + 0xC2B2AE3D27D4EB4FULL;
  h ^= splitmix64(s);
  s ^= k3 + 0x165667B19E3779F9ULL;
  h ^= splitmix64(s);
  return h;
}

// FNV-1a: stable 64-bit hash for deriving streams from string labels.
inline std::uint64_t fnv1a64(const char* data, std::size_t n) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001B3ULL;
  }
  return h;
}

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : state_) w = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on [a, b).
  double uniform(double a, double b) { return a + uniform01() * (b - a); }

  // Exponential(rate) via inverse CDF; U = 0 is resampled so gap times are
  // finite and strictly positive.
  double exponential(double rate) {
    if (!(rate > 0.0)) throw domain_error("exponential: rate must be > 0");
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    return -std::log(u) / rate;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace vecurve

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "byzsim/errors.hpp"

namespace byzsim {

// splitmix64 finalizer; also used to hash stream ids.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Reserved worker ids for non-worker randomness, so adding workers or rounds
// never perturbs another stream.
inline constexpr std::uint64_t kAttackLane = 0xFFFFFFFF00000001ULL;
inline constexpr std::uint64_t kDatasetLane = 0xFFFFFFFF00000002ULL;

// Counter-derived pseudo-random stream. The state is a hash of
// (seed, worker id, round id), so the same triple always reproduces the same
// draws and distinct triples give independent sequences.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t worker, std::uint64_t round) noexcept
      : state_(mix64(mix64(mix64(seed) ^ worker) ^ round)) {}

  std::uint64_t next_u64() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch, two uniforms per draw).
  double gaussian() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Binomial(n, p) by direct CDF inversion of a single uniform draw.
  int binomial(int n, double p) {
    if (n < 0 || p < 0.0 || p > 1.0) throw ConfigError("binomial: invalid parameters");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    const double u = uniform();
    const double odds = p / (1.0 - p);
    double pmf = std::pow(1.0 - p, n);
    double cdf = pmf;
    int k = 0;
    while (u >= cdf && k < n) {
      pmf *= odds * static_cast<double>(n - k) / static_cast<double>(k + 1);
      cdf += pmf;
      ++k;
    }
    return k;
  }

 private:
  std::uint64_t state_;
};

}  // namespace byzsim

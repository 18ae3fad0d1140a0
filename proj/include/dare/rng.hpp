// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded random streams with named substream splitting.
//
// Every command derives all of its randomness from one 64-bit root seed.
// Consumers obtain independent streams via substream(root, "name", index),
// so adding a new consumer never shifts the draws seen by existing ones.
// Sampling primitives are hand-rolled on top of mt19937_64 so that results
// are reproducible across standard-library implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string_view>

namespace dare::rng {

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view name,
                                 std::uint64_t index = 0) {
  return mix64(mix64(root ^ fnv1a(name)) ^ mix64(index));
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = max - max % n;  // rejection bound, kills modulo bias
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  /// One Box-Muller value per call; the spare is discarded so every sample
  /// consumes a fixed number of draws.
  double normal(double mean, double stddev) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Rejection-sampled normal restricted to [lo, hi]. Falls back to clamping
  /// after a bounded number of attempts, which only triggers when [lo, hi]
  /// sits far in the tail.
  double truncated_normal(double mean, double stddev, double lo, double hi) {
    if (stddev <= 0.0) return std::clamp(mean, lo, hi);
    double x = mean;
    for (int attempt = 0; attempt < 256; ++attempt) {
      x = normal(mean, stddev);
      if (x >= lo && x <= hi) return x;
    }
    return std::clamp(x, lo, hi);
  }

  /// Index draw from a normalized probability vector (CDF inversion).
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.empty() ? 0 : probs.size() - 1;
  }

 private:
  std::mt19937_64 gen_;
};

inline Stream substream(std::uint64_t root, std::string_view name,
                        std::uint64_t index = 0) {
  return Stream(derive_seed(root, name, index));
}

}  // namespace dare::rng

// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "mk/tensor.hpp"

namespace mk {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based generator: the i-th 64-bit output (i = 1, 2, ...) is
// mix64(seed + i * 0x9e3779b97f4a7c15). The whole state is (seed, counter),
// so streams are identical on every platform and can be checkpointed.
//
// Child streams come from split(id), whose seed is
// mix64(seed ^ mix64(id + 0x632be59bd9b4e019)).
class Rng {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  explicit Rng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept { return mix64(seed_ + (++counter_) * kGolden); }

  // [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1): never returns 0, safe for log().
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Box-Muller, cosine branch. Consumes two outputs per call.
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [lo, hi] by rejection, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ParameterError("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  Rng split(std::uint64_t stream) const noexcept {
    return Rng(mix64(seed_ ^ mix64(stream + 0x632be59bd9b4e019ULL)));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

// i.i.d. N(0,1). Box-Muller pairs fill consecutive elements (cos, sin).
template <Real T = double>
Tensor<T> randn(Rng& rng, Shape shape) {
  Tensor<T> out(std::move(shape));
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(rng.uniform_open()));
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    out[i] = static_cast<T>(r * std::cos(theta));
    if (i + 1 < n) out[i + 1] = static_cast<T>(r * std::sin(theta));
  }
  return out;
}

template <Real T = double>
Tensor<T> rand_uniform(Rng& rng, Shape shape, double lo = 0.0, double hi = 1.0) {
  Tensor<T> out(std::move(shape));
  for (auto& x : out.values()) x = static_cast<T>(lo + (hi - lo) * rng.uniform());
  return out;
}

}  // namespace mk

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace mfgs {

/// Seeded generator with explicit value mappings on top of mt19937_64, so
/// the produced streams are identical across platforms and standard-library
/// versions (std::uniform_*_distribution makes no such guarantee).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform on [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// exp(uniform(log lo, log hi)); requires 0 < lo <= hi.
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  /// Uniform integer in [lo, hi], both inclusive, rejection-sampled so the
  /// draw is unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (range == 0) return static_cast<std::int64_t>(gen_());  // full 64-bit span
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t rem = (max % range + 1) % range;  // 2^64 mod range
    std::uint64_t x = gen_();
    while (rem != 0 && x > max - rem) x = gen_();
    return lo + static_cast<std::int64_t>(x % range);
  }

  /// Raw word, for deriving independent sub-streams.
  std::uint64_t next_seed() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mfgs

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace postsel {

/// Seeded random stream. Every variate is a deterministic function of the
/// engine state; normals use inverse-CDF so that draw counts are fixed and
/// results do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent substream keyed by (seed, tags...), e.g. (seed, replicate).
  static Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal via Phi^{-1}(uniform()).
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to derive substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed of the substream keyed by (seed, tags...).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

}  // namespace postsel

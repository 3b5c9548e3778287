#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace homkit {

/// SplitMix64 mixing step; used for seed derivation.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and up to two stream
/// identifiers. Deterministic and order-sensitive.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_a,
                          std::uint64_t stream_b = 0);

/// FNV-1a 64-bit string hash; used to derive per-task seeds from string ids.
std::uint64_t fnv1a64(std::string_view s);

/// Deterministic random generator. The engine is the standard-specified
/// mt19937_64 and every distribution is implemented here, so sequences are
/// bit-reproducible across platforms and standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Unbiased uniform integer in [0, n); n must be positive.
  int index(int n);

  /// Derives an independent child generator; does not advance this one.
  Rng fork(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace homkit

#include "homkit/rng.hpp"

#include <cmath>
#include <numbers>

#include "homkit/errors.hpp"

namespace homkit {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream_a,
                          std::uint64_t stream_b) {
  std::uint64_t s = splitmix64(base);
  s = splitmix64(s ^ (0x9e3779b97f4a7c15ull + stream_a));
  s = splitmix64(s ^ (0xc2b2ae3d27d4eb4full + stream_b));
  return s;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // Box-Muller; u1 is kept away from 0 so the log is finite.
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

int Rng::index(int n) {
  if (n <= 0) throw InvalidInput("Rng::index: n must be positive");
  const std::uint64_t n64 = static_cast<std::uint64_t>(n);
  // Rejection sampling below the largest multiple of n, so the result is
  // exactly uniform.
  const std::uint64_t limit = (~std::uint64_t{0} / n64) * n64;
  std::uint64_t r = next_u64();
  while (r >= limit) r = next_u64();
  return static_cast<int>(r % n64);
}

}  // namespace homkit

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace chemocal {

/// SplitMix64 finalizer (Steele, Lea & Flood). Used to derive independent
/// seeds for per-entity streams from a root seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for stream `(a, b)` under `root`. Streams are keyed by entity index
/// (bulk, subsample, ...) so generation order does not matter.
constexpr std::uint64_t stream_seed(std::uint64_t root, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(root) ^ a) ^ (b + 0x632BE59BD9B4E019ULL));
}

/// Portable random stream: std::mt19937_64 (bit-exact across standard
/// libraries) with variate conversions implemented here, since the standard
/// distributions are implementation-defined.
///
///   uniform()  = (next >> 11) * 2^-53                       in [0, 1)
///   normal()   = Box-Muller, cosine branch only, u1 in (0, 1]
///   below(k)   = next % k
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  std::uint64_t below(std::uint64_t k) { return engine_() % k; }

 private:
  std::mt19937_64 engine_;
};

/// Skew-normal variate with location 0, scale `omega`, shape `alpha`, via the
/// two-normal construction: delta*|U0| + sqrt(1-delta^2)*U1.
inline double skew_normal(Rng& rng, double alpha, double omega) {
  const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
  const double u0 = rng.normal();
  const double u1 = rng.normal();
  return omega * (delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1);
}

inline double skew_normal_mean(double alpha, double omega) {
  const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
  return omega * delta * std::sqrt(2.0 / std::numbers::pi);
}

}  // namespace chemocal

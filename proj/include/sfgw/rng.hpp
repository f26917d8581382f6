#pragma once

#include <cstdint>
#include <random>

namespace sfgw {

/// Seeded random source threaded explicitly through every sampler.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The variate transforms (uniform, normal, gamma, beta) are
/// implemented here rather than taken from <random> so streams are identical
/// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent child stream; depends only on the parent seed and `stream`.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double normal();
  /// Gamma(shape, 1), Marsaglia-Tsang squeeze method.
  double gamma(double shape);
  /// Beta(a, b) via X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b).
  double beta(double a, double b);
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace sfgw

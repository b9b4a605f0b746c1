#pragma once

#include <cstdint>
#include <random>

namespace ssnsm {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed for stream `stream` of replicate `index` under a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream);

/// Portable random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the variate transforms are our own so
/// results do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);
  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ssnsm

#pragma once

#include <cstdint>

namespace palmcd {

/// Counter-based random stream. Draw i of stream (seed, key) is a pure
/// function of (seed, key, i), so per-element streams stay reproducible no
/// matter how the elements are scheduled.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t key);

  std::uint64_t next_u64();
  /// uniform in (0, 1)
  double next_uniform();
  /// standard normal (Box-Muller)
  double next_gaussian();
  /// Gamma(shape, scale 1), shape >= 1 (Marsaglia-Tsang squeeze)
  double next_gamma(double shape);

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used as the mixing function throughout.
std::uint64_t mix64(std::uint64_t x);

}  // namespace palmcd

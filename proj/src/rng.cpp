#include "palmcd/rng.hpp"

#include <cmath>

namespace palmcd {

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t key)
    : base_(mix64(seed + 0x9e3779b97f4a7c15ULL) ^ mix64(key ^ 0x517cc1b727220a95ULL)) {}

std::uint64_t CounterRng::next_u64() {
  // splitmix64 sequence rooted at base_
  std::uint64_t z = base_ + (++counter_) * 0x9e3779b97f4a7c15ULL;
  return mix64(z);
}

double CounterRng::next_uniform() {
  // 53-bit mantissa, shifted into (0,1)
  const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return u > 0.0 ? u : 0x1.0p-53;
}

double CounterRng::next_gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 6.283185307179586476925286766559 * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

double CounterRng::next_gamma(double shape) {
  // Marsaglia & Tsang, valid for shape >= 1.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = next_gaussian();
    double t = 1.0 + c * x;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    const double u = next_uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace palmcd

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace cvi {

/// Seeded generator for environment sampling and instance generation.
///
/// Only the raw 64-bit output of std::mt19937_64 is used (its sequence is fixed
/// by the standard); the variates below are derived from it explicitly so that
/// a seed yields the same stream under every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_left() { return 1.0 - uniform(); }

  double exponential() { return -std::log(uniform_open_left()); }

  double normal() {
    // Box-Muller, one draw per call.
    const double u1 = uniform_open_left();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 is boosted through shape + 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double boost = std::pow(uniform_open_left(), 1.0 / shape);
      return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open_left();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Index drawn from a probability row by inverse CDF; consumes exactly one uniform.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      last_positive = i;
      acc += probs[i];
      if (u < acc) return i;
    }
    // Row sums short of 1 by rounding.
    return last_positive;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cvi

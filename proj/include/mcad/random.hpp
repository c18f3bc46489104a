#pragma once

// Keyed random streams. Every stochastic operation derives its own engine
// from (seed, stream, index), so results never depend on evaluation order or
// on how trials are distributed over threads.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace mcad {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stream identifiers used across the library.
enum class Stream : std::uint64_t {
  users = 1,
  signatures = 2,
  activities = 3,
  channels = 4,
  noise = 5,
  trial = 6,
  monte_carlo = 7,
};

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                           std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) + index);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                           std::uint64_t index = 0) noexcept {
  return derive_seed(seed, static_cast<std::uint64_t>(stream), index);
}

/// 64-bit Mersenne twister with portable uniform/normal transforms
/// (std::normal_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  Rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0)
      : engine_(derive_seed(seed, stream, index)) {}

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Circularly symmetric CN(0, variance): real and imaginary parts N(0, variance/2).
  std::complex<double> complex_normal(double variance = 1.0) noexcept {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

  /// Gamma(shape, 1) for integer shape >= 1, as a sum of exponentials.
  double gamma_integer(int shape) noexcept {
    double sum = 0.0;
    for (int i = 0; i < shape; ++i) {
      double u = 0.0;
      do {
        u = uniform();
      } while (u <= 0.0);
      sum -= std::log(u);
    }
    return sum;
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mcad

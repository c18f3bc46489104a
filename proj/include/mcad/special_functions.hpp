#pragma once

// Regularized incomplete gamma functions and a few distribution helpers.
//
// P(a, x) uses the power series below x = a + 1 and the Legendre continued
// fraction (modified Lentz) above it, so whichever of P or Q is small is
// always computed directly rather than as a difference from one.

#include <cmath>
#include <limits>
#include <numbers>

#include "mcad/errors.hpp"

namespace mcad::special {

struct GammaPQ {
  double p;  ///< lower regularized incomplete gamma P(a, x)
  double q;  ///< upper regularized incomplete gamma Q(a, x) = 1 - P(a, x)
};

namespace detail {

inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxTerms = 100000;

// x^a e^-x / Gamma(a), in log space.
inline double log_gamma_prefactor(double a, double x) {
  return a * std::log(x) - x - std::lgamma(a);
}

inline double lower_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxTerms; ++n) {
    term *= x / (a + n);
    sum += term;
    if (term < sum * kEps) break;
  }
  return std::exp(log_gamma_prefactor(a, x) + std::log(sum));
}

inline double upper_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::exp(log_gamma_prefactor(a, x) + std::log(h));
}

}  // namespace detail

/// Both regularized incomplete gamma functions at once.
inline GammaPQ regularized_gamma(double a, double x) {
  if (!(a > 0.0)) throw DomainError("incomplete gamma: shape must be positive");
  if (std::isnan(x) || x < 0.0) throw DomainError("incomplete gamma: x must be non-negative");
  if (x == 0.0) return {0.0, 1.0};
  if (std::isinf(x)) return {1.0, 0.0};
  if (x < a + 1.0) {
    const double p = detail::lower_series(a, x);
    return {p, 1.0 - p};
  }
  const double q = detail::upper_continued_fraction(a, x);
  return {1.0 - q, q};
}

inline double gamma_p(double a, double x) { return regularized_gamma(a, x).p; }
inline double gamma_q(double a, double x) { return regularized_gamma(a, x).q; }

/// Standard normal CDF.
inline double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

/// Pr(Binomial(n, p) <= k).
inline double binomial_cdf(int k, int n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  double sum = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double log_pmf =
        log_factorial(n) - log_factorial(i) - log_factorial(n - i) + i * lp + (n - i) * lq;
    sum += std::exp(log_pmf);
  }
  return std::min(sum, 1.0);
}

/// Numerically stable logistic function 1 / (1 + e^-z).
inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace mcad::special

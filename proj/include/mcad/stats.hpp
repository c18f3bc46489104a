#pragma once

// Small statistics toolbox: empirical CDF distances, KS p-values, Wilson
// intervals and percentiles.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "mcad/errors.hpp"
#include "mcad/special_functions.hpp"

namespace mcad::stats {

/// sup_x |F_a(x) - F_b(x)| between two empirical CDFs.
inline double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

/// sup_x |F_n(x) - F(x)| for a sample against a continuous CDF.
template <class Cdf>
double ks_distance(std::span<const double> sample, Cdf&& cdf) {
  if (sample.empty()) throw DomainError("ks_distance: empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(f - i / n)});
  }
  return d;
}

/// Asymptotic Kolmogorov survival function Pr(K > lambda).
inline double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// p-value of the two-sample KS test.
inline double ks_pvalue(double distance, std::size_t na, std::size_t nb) {
  const double ne = static_cast<double>(na) * nb / (static_cast<double>(na) + nb);
  const double sqrt_ne = std::sqrt(ne);
  return kolmogorov_survival((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * distance);
}

/// Wilson score interval for a binomial proportion (z = 1.96 by default).
inline std::pair<double, double> wilson_interval(long successes, long trials, double z = 1.959963984540054) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = successes / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Nearest-rank percentile (q in (0, 1]) of an unsorted sample.
inline double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw DomainError("percentile: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

/// sup over k of |F_emp(k/T) - F_pred(k/T)|, where F_emp is the empirical CDF
/// of per-user error counts over T trials and F_pred is the CDF those
/// counts would have if user n erred independently with probability p[n]
/// in every trial (a per-user Binomial(T, p[n]) mixture).
inline double binomial_predictive_gap(std::span<const long> error_counts, std::span<const double> p,
                                      long trials) {
  if (error_counts.size() != p.size() || p.empty()) {
    throw DimensionError("binomial_predictive_gap: size mismatch");
  }
  const double n = static_cast<double>(p.size());
  std::vector<long> sorted(error_counts.begin(), error_counts.end());
  std::sort(sorted.begin(), sorted.end());
  double gap = 0.0;
  std::size_t idx = 0;
  for (long k = 0; k <= trials; ++k) {
    while (idx < sorted.size() && sorted[idx] <= k) ++idx;
    const double f_emp = idx / n;
    double f_pred = 0.0;
    for (double pn : p) f_pred += special::binomial_cdf(static_cast<int>(k), static_cast<int>(trials), pn);
    f_pred /= n;
    gap = std::max(gap, std::abs(f_emp - f_pred));
  }
  return gap;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace mcad::stats

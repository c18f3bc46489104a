#pragma once

// Globally adaptive Gauss-Kronrod integration on top of Boost's G7-K15 rule.
//
// Boost's own recursive driver keeps bisecting to its depth limit when the
// requested tolerance is below the rounding floor of the integrand; this
// driver refines the worst segment first and stops at that floor or after a
// fixed segment budget.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "mcad/errors.hpp"

namespace mcad::quad {

inline constexpr double kRelTol = 1e-10;
inline constexpr int kMaxSegments = 4000;

namespace detail {

struct Segment {
  double a;
  double b;
  double value;
  double error;
  double l1;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// G7-K15 on [a, b] from Boost's tabulated nodes; error = |K15 - G7| with a
// rounding floor of 2 eps |K15|.
template <class F>
Segment k15(F& f, double a, double b) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  const auto& x = Kronrod::abscissa();
  const auto& wk = Kronrod::weights();
  const auto& wg = Gauss::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double f0 = f(c);
  double kr = f0 * wk[0];
  double ga = 0.0;
  double l1 = std::abs(f0) * wk[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double fp = f(c + h * x[i]);
    const double fm = f(c - h * x[i]);
    kr += (fp + fm) * wk[i];
    l1 += (std::abs(fp) + std::abs(fm)) * wk[i];
    // Even-indexed Kronrod nodes (and the centre) are the G7 nodes.
    if (i % 2 == 0) ga += (fp + fm) * wg[i / 2];
  }
  ga += f0 * wg[0];
  Segment s{a, b, h * kr, 0.0, h * l1};
  s.error = std::max(std::abs(h * (kr - ga)), 2.0 * std::numeric_limits<double>::epsilon() * std::abs(s.value));
  return s;
}

}  // namespace detail

/// Integral of f over [lo, hi].
template <class F>
double integrate(F&& f, double lo, double hi, double rel_tol = kRelTol) {
  if (!(hi > lo)) return 0.0;
  std::priority_queue<detail::Segment> heap;
  auto first = detail::k15(f, lo, hi);
  double value = first.value;
  double error = first.error;
  double l1 = first.l1;
  heap.push(first);
  constexpr double kFloor = 50.0 * std::numeric_limits<double>::epsilon();
  while (static_cast<int>(heap.size()) < kMaxSegments) {
    if (error <= rel_tol * std::abs(value) || error <= kFloor * l1) break;
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const auto left = detail::k15(f, worst.a, mid);
    const auto right = detail::k15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  double sum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    heap.pop();
  }
  return sum;
}

/// Integral over [lo, inf) for lo > 0 via the map g = lo / (1 - u), u in [0, 1).
template <class F>
double integrate_to_infinity(F&& f, double lo, double rel_tol = kRelTol) {
  if (!(lo > 0.0)) throw DomainError("integrate_to_infinity: lower limit must be positive");
  auto mapped = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double one_minus = 1.0 - u;
    const double g = lo / one_minus;
    const double v = f(g) * lo / (one_minus * one_minus);
    return std::isfinite(v) ? v : 0.0;
  };
  return integrate(mapped, 0.0, 1.0, rel_tol);
}

}  // namespace mcad::quad

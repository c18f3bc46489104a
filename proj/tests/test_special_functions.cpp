#include <gtest/gtest.h>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

#include "mcad/errors.hpp"
#include "mcad/special_functions.hpp"

using namespace mcad;

TEST(IncompleteGamma, MatchesBoostOnGrid) {
  for (double a : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 128.0, 512.0}) {
    for (double x : {1e-6, 0.01, 0.3, 1.0, 2.5, 7.9, 8.0, 8.1, 20.0, 100.0, 600.0}) {
      const auto pq = special::regularized_gamma(a, x);
      const double p = boost::math::gamma_p(a, x);
      const double q = boost::math::gamma_q(a, x);
      EXPECT_NEAR(pq.p, p, 1e-12 * std::max(p, 1e-300) + 1e-300) << "a=" << a << " x=" << x;
      if (q > 1e-290) EXPECT_NEAR(pq.q / q, 1.0, 1e-11) << "a=" << a << " x=" << x;
    }
  }
}

TEST(IncompleteGamma, EdgeValues) {
  EXPECT_EQ(special::gamma_p(3.0, 0.0), 0.0);
  EXPECT_EQ(special::gamma_q(3.0, 0.0), 1.0);
  EXPECT_EQ(special::gamma_p(3.0, INFINITY), 1.0);
  EXPECT_THROW(special::gamma_p(0.0, 1.0), DomainError);
  EXPECT_THROW(special::gamma_p(1.0, -1.0), DomainError);
  EXPECT_THROW(special::gamma_p(1.0, NAN), DomainError);
}

TEST(IncompleteGamma, ShapeOneIsExponential) {
  for (double x : {0.1, 1.0, 5.0, 30.0}) {
    EXPECT_NEAR(special::gamma_q(1.0, x), std::exp(-x), 1e-15 + 1e-13 * std::exp(-x));
  }
}

TEST(NormalCdf, KnownValues) {
  EXPECT_DOUBLE_EQ(special::normal_cdf(0.0), 0.5);
  EXPECT_NEAR(special::normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(special::normal_cdf(-8.0), 6.22096057427178e-16, 1e-27);
}

TEST(BinomialCdf, MatchesBoost) {
  for (int n : {1, 10, 200}) {
    for (double p : {0.001, 0.05, 0.5, 0.93}) {
      boost::math::binomial_distribution<double> d(n, p);
      for (int k = 0; k < n; k += std::max(1, n / 7)) {
        EXPECT_NEAR(special::binomial_cdf(k, n, p), boost::math::cdf(d, k), 1e-12);
      }
    }
  }
  EXPECT_EQ(special::binomial_cdf(-1, 5, 0.3), 0.0);
  EXPECT_EQ(special::binomial_cdf(5, 5, 0.3), 1.0);
}

TEST(Logistic, StableInTails) {
  EXPECT_DOUBLE_EQ(special::logistic(0.0), 0.5);
  EXPECT_EQ(special::logistic(1000.0), 1.0);
  EXPECT_GT(special::logistic(-700.0), 0.0);
  EXPECT_NEAR(special::logistic(-700.0), std::exp(-700.0), 1e-310);
  EXPECT_DOUBLE_EQ(special::logistic(2.0) + special::logistic(-2.0), 1.0);
}

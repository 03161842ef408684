#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "valley/rng.hpp"
#include "valley/stats.hpp"

using namespace valley;

TEST(Kolmogorov, KnownValues) {
  EXPECT_NEAR(stats::kolmogorov_q(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(stats::kolmogorov_q(1.63), 0.0098, 3e-4);
  EXPECT_DOUBLE_EQ(stats::kolmogorov_q(0.0), 1.0);
  EXPECT_LT(stats::kolmogorov_q(5.0), 1e-20);
}

TEST(Ks, ExactExponentialRejectsAtNominalRate) {
  int rejections = 0;
  const int trials = 400;
  for (int r = 0; r < trials; ++r) {
    Rng rng = make_stream(100, r);
    std::vector<double> x(2000);
    for (auto& v : x) v = exponential(rng, 2.0);
    rejections += stats::ks_exponential(x, 2.0).p_value < 0.01;
  }
  // ~1% expected; 3 standard deviations above is ~2.5%
  EXPECT_LE(rejections, 10);
}

TEST(Ks, PowerAgainstWrongRate) {
  Rng rng = make_stream(3, 0);
  std::vector<double> x(10000);
  for (auto& v : x) v = exponential(rng, 1.0);
  EXPECT_LT(stats::ks_exponential(x, 2.0).p_value, 1e-12);
  EXPECT_GT(stats::ks_exponential(x, 1.0).p_value, 1e-3);
}

TEST(Ks, DegenerateAndGuards) {
  std::vector<double> c(50, 1.0);
  const auto r = stats::ks_exponential(c, 1.0);
  EXPECT_NEAR(r.statistic, 1.0 - std::exp(-1.0), 1e-12);
  EXPECT_LT(r.p_value, 1e-6);
  EXPECT_THROW(stats::ks_exponential(std::vector<double>(19, 1.0), 1.0), std::invalid_argument);
  std::vector<double> z(30, 1.0);
  z[3] = 0.0;
  EXPECT_THROW(stats::ks_exponential(z, 1.0), std::invalid_argument);
  EXPECT_THROW(stats::ks_exponential(c, 0.0), std::invalid_argument);
}

TEST(Summary, MeanCiMedianRegression) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::mean(x), 2.5);
  EXPECT_DOUBLE_EQ(stats::sample_variance(x), 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(stats::median(x), 2.5);
  EXPECT_DOUBLE_EQ(stats::median({3, 1, 2}), 2.0);
  const auto ci = stats::mean_ci95(x);
  EXPECT_FALSE(ci.degenerate);
  EXPECT_NEAR(ci.hi - ci.lo, 2 * 1.959963984540054 * std::sqrt(5.0 / 12.0), 1e-12);
  EXPECT_TRUE(stats::mean_ci95(std::vector<double>{1.0}).degenerate);

  const std::vector<double> xs{0, 1, 2, 3}, ys{1, 3, 5, 7};
  const auto fit = stats::least_squares(xs, ys);
  EXPECT_DOUBLE_EQ(fit.slope, 2.0);
  EXPECT_DOUBLE_EQ(fit.intercept, 1.0);
  EXPECT_NEAR(fit.slope_se, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(stats::total_variation(std::vector{0.5, 0.5}, std::vector{1.0, 0.0}), 0.5);
}

TEST(Rng, StreamsAreKeyedAndDistinct) {
  Rng a = make_stream(42, 0), b = make_stream(42, 0), c = make_stream(42, 1), d = make_stream(43, 0);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  EXPECT_NE(splitmix64(1), splitmix64(2));
}

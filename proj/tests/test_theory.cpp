#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "valley/fitness.hpp"
#include "valley/landscape.hpp"
#include "valley/theory.hpp"

using namespace valley;

namespace {

using oracles::StepOracle;

ModelSpec three_step_valley() {
  // L=3, alpha=1.5, nbar_0=1, b=(1,1,1,1), f_{1,0}=f_{2,0}=-1, f_{3,0}=0.5
  ModelSpec m;
  m.num_traits = 3;
  Matrix c(4, std::vector<double>(4, 1.0));
  c[3][0] = 0.5;
  c[0][3] = 3.0;
  m.phases = {PhaseSpec{1.0, {1.0, 1.0, 1.0, 1.0}, {0.0, 1.0, 1.0, 0.0}, c}};
  return m;
}

ModelSpec symmetric_pitstop() {
  // traits 0, z=1, w=2, v=3, L=4; alpha=0.5; all b=1
  ModelSpec m;
  m.num_traits = 4;
  Matrix c(5, std::vector<double>(5, 1.0));
  c[4][0] = 0.5;
  c[0][4] = 2.0;
  Matrix c1 = c, c2 = c;
  c1[2][0] = 0.5;
  m.phases = {PhaseSpec{1.0, {1, 1, 1, 1, 1}, {0, 1, 0, 1, 0}, c1}, PhaseSpec{1.0, {1, 1, 1, 1, 1}, {0, 1, 1, 1, 0}, c2}};
  return m;
}

}  // namespace

TEST(Fitness, MonomorphicEquilibrium) {
  EXPECT_DOUBLE_EQ(monomorphic_equilibrium(2, 1, 1), 1.0);
  EXPECT_DOUBLE_EQ(monomorphic_equilibrium(1, 1, 1), 0.0);
  EXPECT_DOUBLE_EQ(monomorphic_equilibrium(3, 1, 0.5), 4.0);
  EXPECT_THROW(monomorphic_equilibrium(1, 0, 0), std::invalid_argument);
}

TEST(Fitness, InvasionFitness) {
  ModelSpec m;
  m.num_traits = 1;
  m.phases = {PhaseSpec{1.0, {2.0, 1.0}, {1.0, 1.0}, {{1, 1}, {1, 1}}}};
  EXPECT_DOUBLE_EQ(invasion_fitness(m, 1, 0, 0), -1.0);
  EXPECT_DOUBLE_EQ(invasion_fitness(m, 0, 0, 0), 0.0);
  m.phases[0].birth[1] = 2.0;
  m.phases[0].death[1] = 0.5;
  EXPECT_DOUBLE_EQ(invasion_fitness(m, 1, 0, 0), 0.5);
  m.phases[0].death[0] = 3.0;
  EXPECT_THROW(invasion_fitness(m, 1, 0, 0), std::domain_error);
}

TEST(Fitness, Average) {
  EXPECT_DOUBLE_EQ(average_fitness(std::vector{1.0, -0.5}, std::vector{1.0, 1.0}), 0.25);
  EXPECT_DOUBLE_EQ(average_fitness(std::vector{0.7, 0.7, 0.7}, std::vector{0.1, 2.0, 3.0}), 0.7);
  EXPECT_DOUBLE_EQ(average_fitness(std::vector{1.0, -2.0}, std::vector{2.0, 1.0}), 0.0);
}

TEST(Fitness, TableMatchesDefinition) {
  const auto m = fixtures::pitstop();
  const auto t = compute_fitness_table(m);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t w = 0; w < 4; ++w)
      for (std::size_t v = 0; v < 4; ++v) {
        const auto& p = m.phases[i];
        const double nbar = (p.birth[v] - p.death[v]) / p.competition[v][v];
        ASSERT_EQ(t.defined(i, w, v), nbar > 0);
        if (nbar > 0) {
          EXPECT_DOUBLE_EQ(t.at(i, w, v), p.birth[w] - p.death[w] - p.competition[w][v] * nbar);
        }
      }
  EXPECT_DOUBLE_EQ(t.avg(2), -0.25);
}

TEST(Lambda, ClosedForm) {
  EXPECT_DOUBLE_EQ(lambda_of_rho(0.25), 0.5);
  EXPECT_DOUBLE_EQ(lambda_of_rho(0.0), 0.0);
  EXPECT_THROW(lambda_of_rho(0.5), std::domain_error);
  EXPECT_NEAR(lambda_series(1.0 / 3.0, 200), 1.0, 1e-9);
}

TEST(Lambda, SeriesMonotoneAndConvergent) {
  for (int k = 1; k <= 9; ++k) {
    const double rho = 0.05 * k;
    double prev = 0.0;
    for (std::size_t n : {1, 10, 100, 1000, 10000}) {
      const double s = lambda_series(rho, n);
      EXPECT_GE(s, prev);
      prev = s;
    }
    EXPECT_NEAR(prev, rho / (1 - 2 * rho), 1e-9) << rho;
  }
}

TEST(Lambda, MatchesBirthDeathRatio) {
  // lambda(rho_w) = b_w / |f_w| with rho = b / (b + d + c nbar)
  const double b = 0.7, d = 0.4, cn = 1.3;
  EXPECT_NEAR(lambda_of_rho(b / (b + d + cn)), b / (d + cn - b), 1e-14);
}

TEST(GuardedProduct, LogSpaceForWideFactors) {
  const double xs[] = {1e200, 1e-190, 3.0};
  EXPECT_NEAR(guarded_product(xs), 3e10, 3e10 * 1e-12);
  const double ys[] = {2.0, -0.5, 4.0};
  EXPECT_DOUBLE_EQ(guarded_product(ys), -4.0);
  EXPECT_DOUBLE_EQ(guarded_product(std::span<const double>{}), 1.0);
}

TEST(ArrivalSet, Examples) {
  const auto a = compute_arrival_set(std::vector{1.0, -0.5}, std::vector{1.0, 1.0});
  ASSERT_EQ(a.intervals.size(), 1u);
  EXPECT_DOUBLE_EQ(a.intervals[0].lo, 0.0);
  EXPECT_DOUBLE_EQ(a.intervals[0].hi, 0.5);
  EXPECT_DOUBLE_EQ(a.total_measure, 0.5);

  const auto full = compute_arrival_set(std::vector{0.3, 2.0, 1.0}, std::vector{1.0, 0.5, 2.0});
  ASSERT_EQ(full.intervals.size(), 1u);
  EXPECT_DOUBLE_EQ(full.total_measure, 3.5);

  EXPECT_TRUE(compute_arrival_set(std::vector{1.0, -2.0}, std::vector{2.0, 1.0}).empty());
  EXPECT_TRUE(compute_arrival_set(std::vector{-1.0, -2.0}, std::vector{2.0, 1.0}).empty());
  EXPECT_THROW(compute_arrival_set(std::vector{1.0, 0.0}, std::vector{1.0, 1.0}), std::domain_error);
}

TEST(ArrivalSet, DenseGridOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> nphase(1, 4);
  std::uniform_real_distribution<double> dur(0.2, 2.0), val(-2.0, 2.0);
  const double h = 1e-4;
  int nonempty = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int ell = nphase(rng);
    std::vector<double> f(ell), T(ell);
    for (int i = 0; i < ell; ++i) {
      T[i] = dur(rng);
      do f[i] = val(rng);
      while (std::abs(f[i]) < 1e-3);
    }
    const StepOracle o(f, T);
    const auto a = compute_arrival_set(f, T);
    nonempty += !a.empty();
    for (const auto& iv : a.intervals) {
      EXPECT_LT(iv.lo, iv.hi);
      EXPECT_GE(iv.lo, 0.0);
      EXPECT_LE(iv.hi, o.P + 1e-12);
    }
    auto near_endpoint = [&](double t) {
      for (const auto& iv : a.intervals)
        if (std::abs(t - iv.lo) <= h || std::abs(t - iv.hi) <= h) return true;
      return false;
    };
    double grid_measure = 0.0;
    for (double t = 0.0; t < o.P; t += h) {
      const bool want = o.in_A(t);
      grid_measure += want ? h : 0.0;
      if (want != a.contains(t)) {
        EXPECT_TRUE(near_endpoint(t)) << "trial " << trial << " t=" << t;
      }
    }
    EXPECT_NEAR(grid_measure, a.total_measure, 2 * h * (1 + a.intervals.size())) << trial;
  }
  EXPECT_GT(nonempty, 20);
}

TEST(ArrivalSet, ExactPredicateAgrees) {
  const std::vector<double> f{1.0, -3.0, 2.0, -0.5}, T{1.0, 0.5, 1.0, 1.5};
  const PeriodicStepFunction g(f, T);
  const auto a = compute_arrival_set(f, T);
  for (double t = 0.0; t < g.period(); t += 0.0137) EXPECT_EQ(in_arrival_set(g, t), a.contains(t)) << t;
}

TEST(ArrivalSet, LongHorizonAndLinearLowerBound) {
  // Points of A keep g(t+s) > g(t) for s up to 10 periods, and above a line
  // of positive slope.
  std::mt19937_64 rng(11);
  const std::vector<double> f{1.5, -1.0, 0.5, -0.5}, T{1.0, 1.0, 0.5, 1.0};
  const StepOracle o(f, T);
  const auto a = compute_arrival_set(f, T);
  ASSERT_FALSE(a.empty());
  std::uniform_real_distribution<double> s_dist(0.0, 10 * o.P);
  for (const auto& iv : a.intervals)
    for (double t = iv.lo; t < iv.hi; t += (iv.hi - iv.lo) / 17) {
      double gamma = o.value(t);
      for (double b : o.breakpoints_after(t, 10 * o.P)) gamma = std::min(gamma, (o.G(b) - o.G(t)) / (b - t));
      ASSERT_GT(gamma, 0.0) << t;
      for (int k = 0; k < 200; ++k) {
        const double s = s_dist(rng);
        if (s == 0.0) continue;
        EXPECT_GT(o.G(t + s), o.G(t));
        EXPECT_GE(o.G(t + s) - o.G(t), gamma * s - 1e-12);
      }
    }
}

TEST(Rates, PhaseRateFactorByFactor) {
  const auto m = three_step_valley();
  const ScalingSpec s{10000, 1.5, 5.0};
  ASSERT_EQ(classify_landscape(m, s).regime, Regime::StrictValley) << classify_landscape(m, s).reason;
  const auto r = phase_crossing_rate(m, compute_fitness_table(m), s, 0);
  EXPECT_DOUBLE_EQ(r.resident, 1.0);
  EXPECT_DOUBLE_EQ(r.mesoscopic_chain, 1.0);
  EXPECT_DOUBLE_EQ(r.feeding_birth, 1.0);
  EXPECT_DOUBLE_EQ(r.valley_chain, 1.0);
  EXPECT_DOUBLE_EQ(r.survival, 0.5);
  EXPECT_DOUBLE_EQ(r.rate, 0.5);
}

TEST(Rates, PositivePartAndEmptyProducts) {
  const auto m = fixtures::strict_valley();
  const auto s = fixtures::strict_valley_scaling();
  EXPECT_DOUBLE_EQ(phase_crossing_rate(m, s, 1), 0.0);

  // L=1, alpha=0.5: nbar_0 b_0 (f_1)_+ / b_1
  ModelSpec one;
  one.num_traits = 1;
  one.phases = {PhaseSpec{1.0, {2.0, 3.0}, {1.0, 0.5}, {{1.0, 2.0}, {1.0, 1.0}}}};
  const double f1 = 3.0 - 0.5 - 1.0;
  EXPECT_DOUBLE_EQ(phase_crossing_rate(one, ScalingSpec{100, 0.5, 1.0}, 0), 1.0 * 2.0 * f1 / 3.0);
}

TEST(Rates, StrictValleyReport) {
  const auto rep = strict_valley_report(fixtures::strict_valley(), fixtures::strict_valley_scaling());
  ASSERT_EQ(rep.phase_rates.size(), 2u);
  EXPECT_DOUBLE_EQ(rep.phase_rates[0], 0.5);
  EXPECT_DOUBLE_EQ(rep.phase_rates[1], 0.0);
  EXPECT_DOUBLE_EQ(rep.arrival_set.total_measure, 0.5);
  EXPECT_DOUBLE_EQ(rep.effective_rate, 0.125);
  // 1 / (K mu^2 R_eff) = 8 K^{1/3}
  EXPECT_NEAR(rep.timescale, 8.0 * std::cbrt(1e4), 1e-9);
  EXPECT_NEAR(rep.timescale, 172.4, 0.05);
  // floor(alpha) = 1: trait 1 is mesoscopic, the valley chain is empty
  EXPECT_TRUE(std::isnan(rep.rho[0][1]));
  EXPECT_DOUBLE_EQ(rep.phases[0].mesoscopic_chain, 1.0);
  EXPECT_DOUBLE_EQ(rep.phases[0].feeding_birth, 1.0);
  EXPECT_DOUBLE_EQ(rep.phases[0].valley_chain, 1.0);
  EXPECT_DOUBLE_EQ(rep.phases[0].survival, 0.5);
}

TEST(Rates, CrossingValleyReport) {
  // R^1 = 1 * (2/2) * 0.25 * (3/4); A = {t : 3(1 - t) - 0.5 > 0} = [0, 5/6)
  const auto rep = strict_valley_report(fixtures::crossing_valley(), fixtures::crossing_valley_scaling());
  EXPECT_DOUBLE_EQ(rep.phase_rates[0], 0.1875);
  EXPECT_DOUBLE_EQ(rep.phase_rates[1], 0.0);
  ASSERT_EQ(rep.arrival_set.intervals.size(), 1u);
  EXPECT_NEAR(rep.arrival_set.intervals[0].hi, 5.0 / 6.0, 1e-15);
  EXPECT_NEAR(rep.effective_rate, 0.078125, 1e-15);
  EXPECT_TRUE(classify_landscape(fixtures::crossing_valley(), fixtures::crossing_valley_scaling()).strict());
}

TEST(Rates, EffectiveRateAgainstQuadrature) {
  const std::vector<double> R{0.5, 0.0}, T{1.0, 1.0};
  const auto a = compute_arrival_set(std::vector{1.0, -0.5}, T);
  const double exact = effective_crossing_rate(R, a, T);
  const double h = 1e-5;
  double q = 0.0;
  for (double t = h / 2; t < 2.0; t += h) q += (a.contains(t) ? R[t < 1.0 ? 0 : 1] : 0.0) * h;
  EXPECT_NEAR(exact, 0.125, 1e-15);
  EXPECT_NEAR(q / 2.0, exact, 1e-5);
  EXPECT_EQ(effective_crossing_rate(R, ArrivalSet{{}, 2.0, 0.0}, T), 0.0);
  const auto full = compute_arrival_set(std::vector{1.0}, std::vector{3.0});
  EXPECT_DOUBLE_EQ(effective_crossing_rate(std::vector{0.7}, full, std::vector{3.0}), 0.7);
}

TEST(Rates, EffectiveRateRotationInvariant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-1.0, 2.0), dur(0.3, 2.0), rate(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> f(3), T(3), R(3);
    for (int i = 0; i < 3; ++i) {
      f[i] = val(rng);
      T[i] = dur(rng);
      R[i] = f[i] > 0 ? rate(rng) : 0.0;
    }
    const double base = effective_crossing_rate(R, compute_arrival_set(f, T), T);
    std::rotate(f.begin(), f.begin() + 1, f.end());
    std::rotate(T.begin(), T.begin() + 1, T.end());
    std::rotate(R.begin(), R.begin() + 1, R.end());
    const double rotated = effective_crossing_rate(R, compute_arrival_set(f, T), T);
    EXPECT_NEAR(base, rotated, 1e-12);
    EXPECT_LE(base, *std::max_element(R.begin(), R.end()) + 1e-15);
  }
}

TEST(Timescale, Prediction) {
  const ScalingSpec s{10000, 1.5, 5.0};
  EXPECT_NEAR(strict_timescale(0.125, s, 2), 172.3548, 1e-3);
  EXPECT_TRUE(std::isinf(strict_timescale(0.0, s, 2)));
  // one phase: 1/(K mu^L R^1)
  EXPECT_NEAR(strict_timescale(0.5, s, 2), 1.0 / (1e4 * std::pow(1e4, -4.0 / 3.0) * 0.5), 1e-9);
}

TEST(Pitstop, SymmetricToy) {
  const auto m = symmetric_pitstop();
  const ScalingSpec s{1000, 0.5, 10.0};
  const auto cls = classify_landscape(m, s);
  ASSERT_EQ(cls.regime, Regime::Pitstop) << cls.reason;
  ASSERT_EQ(cls.pitstop_trait, 2u);
  const auto rep = pitstop_crossing_rate(m, s);
  EXPECT_DOUBLE_EQ(rep.prefix, 1.0);
  EXPECT_DOUBLE_EQ(rep.Lambda[0], 1.0);
  EXPECT_DOUBLE_EQ(rep.Lambda[1], 1.0);
  EXPECT_DOUBLE_EQ(rep.fit_term, 1.0);
  EXPECT_DOUBLE_EQ(rep.unfit_term, 0.5);
  EXPECT_DOUBLE_EQ(rep.rate, 1.5);
  EXPECT_DOUBLE_EQ(rep.peak_exponent, 5.0);
  EXPECT_DOUBLE_EQ(rep.h_zero, 1.5);
  EXPECT_LT(rep.h_zero, 2.0);
}

TEST(Pitstop, EmptyLambdaRange) {
  const auto rep = pitstop_crossing_rate(fixtures::pitstop(), fixtures::pitstop_scaling());
  EXPECT_EQ(rep.w, 2u);
  EXPECT_DOUBLE_EQ(rep.Lambda[0], 1.0);
  EXPECT_DOUBLE_EQ(rep.Lambda[1], 1.0);
  EXPECT_GT(rep.rate, 0.0);
}

TEST(Pitstop, TimescaleIdentity) {
  for (double lambda : {5.0, 10.0, 15.0}) {
    const auto s = fixtures::pitstop_scaling(lambda);
    const auto rep = pitstop_crossing_rate(fixtures::pitstop(), s);
    const double naive = strict_timescale(rep.rate, s, 3);
    EXPECT_NEAR(rep.timescale / naive, lambda * std::exp(-lambda * 1.0 * 0.5), 1e-12 * rep.timescale / naive);
  }
}

TEST(Pitstop, RejectsStrictValley) {
  EXPECT_THROW(pitstop_crossing_rate(fixtures::strict_valley(), fixtures::strict_valley_scaling()), std::domain_error);
}

TEST(GrowthProfile, Examples) {
  auto g = pitstop_growth_profile(std::vector{0.5, -1.0}, std::vector{1.0, 1.0});
  EXPECT_DOUBLE_EQ(g.t_star, 0.0);
  EXPECT_DOUBLE_EQ(g.s_star, 1.0);
  EXPECT_DOUBLE_EQ(g.peak, 0.5);
  g = pitstop_growth_profile(std::vector{1.0, -0.25, 0.5, -2.0}, std::vector{1.0, 1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(g.t_star, 0.0);
  EXPECT_DOUBLE_EQ(g.s_star, 3.0);
  EXPECT_DOUBLE_EQ(g.peak, 1.25);
  g = pitstop_growth_profile(std::vector{-1.0, -0.5}, std::vector{1.0, 1.0});
  EXPECT_EQ(g.peak, 0.0);
  EXPECT_EQ(g.s_star, 0.0);
  EXPECT_THROW(pitstop_growth_profile(std::vector{1.0, -0.5}, std::vector{1.0, 1.0}), std::domain_error);
}

namespace {

struct GridOptimum {
  double t = 0, s = 0, peak = 0;
};

// Brute force over (t, s) on a grid; the walk in s stops once the running
// integral is no longer positive.
GridOptimum grid_optimizer(const StepOracle& o, double h) {
  GridOptimum best;
  const long n = std::lround(o.P / h);
  for (long i = 0; i < n; ++i) {
    const double t = i * h, g0 = o.G(t);
    for (long k = 1; k <= n; ++k) {
      const double g = o.G(t + k * h) - g0;
      if (!(g > 0)) break;
      if (g > best.peak) best = {t, k * h, g};
    }
  }
  return best;
}

}  // namespace

TEST(GrowthProfile, GridOracleFourPhases) {
  const StepOracle o({1.0, -0.25, 0.5, -2.0}, {1.0, 1.0, 1.0, 1.0});
  const auto b = grid_optimizer(o, 1e-3);
  EXPECT_NEAR(b.peak, 1.25, 1e-9);
  EXPECT_NEAR(b.t, 0.0, 1e-3);
  EXPECT_NEAR(b.s, 3.0, 1e-3);
}

TEST(GrowthProfile, OptimumSitsOnPhaseBoundaries) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> nphase(2, 4);
  std::uniform_real_distribution<double> dur(0.25, 1.5), val(-2.0, 1.5);
  const double h = 5e-3;
  int tested = 0;
  while (tested < 50) {
    const int ell = nphase(rng);
    std::vector<double> f(ell), T(ell);
    for (int i = 0; i < ell; ++i) {
      f[i] = val(rng);
      T[i] = std::round(dur(rng) / h) * h;  // boundaries on the grid
    }
    if (!(average_fitness(f, T) < 0)) continue;
    ++tested;
    const StepOracle o(f, T);
    const auto exact = pitstop_growth_profile(f, T);
    const auto grid = grid_optimizer(o, h);
    EXPECT_NEAR(grid.peak, exact.peak, 1e-9) << tested;
    if (exact.peak > 0) {
      auto on_boundary = [&](double x) {
        double b = 0;
        for (int c = 0; c < 3; ++c)
          for (int i = 0; i < ell; ++i) {
            if (std::abs(x - b) <= h / 2) return true;
            b += T[i];
          }
        return false;
      };
      EXPECT_TRUE(on_boundary(grid.t)) << tested;
      EXPECT_TRUE(on_boundary(grid.t + grid.s)) << tested;
    }
  }
}

TEST(Mesoscopic, Examples) {
  ModelSpec m;
  m.num_traits = 3;
  // nbar_0 = 1, b_0 = 1, f_{1,0} = -0.5, b_1 = 1, f_{2,0} = -1
  m.phases = {PhaseSpec{1.0, {1.0, 1.0, 0.5, 0.1}, {0.0, 0.5, 0.5, 0.1}, fixtures::ones(4)}};
  const auto t = mesoscopic_equilibria(m, 2.5);
  EXPECT_DOUBLE_EQ(t.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(t.at(0, 1), 2.0);
  // independent recursion N_v = N_{v-1} b_{v-1} / |f_v|
  double n = 1.0;
  for (std::size_t v = 1; v <= 2; ++v) n *= m.phases[0].birth[v - 1] / std::abs(invasion_fitness(m, v, 0, 0));
  EXPECT_DOUBLE_EQ(t.at(0, 2), n);
  EXPECT_DOUBLE_EQ(t.at(0, 2), 2.0);
}

TEST(Mesoscopic, FixtureValues) {
  const auto t = mesoscopic_equilibria(fixtures::mesoscopic(), 2.5);
  EXPECT_DOUBLE_EQ(t.at(0, 1), 1.5);
  EXPECT_DOUBLE_EQ(t.at(0, 2), 1.5);
  EXPECT_DOUBLE_EQ(t.at(1, 1), 0.75);
  EXPECT_DOUBLE_EQ(t.at(1, 2), 0.5);
}

TEST(Mesoscopic, RejectsFitMesoscopicTrait) {
  auto m = fixtures::mesoscopic();
  m.phases[0].death[1] = 0.0;
  m.phases[0].competition[1][0] = 0.5;
  EXPECT_THROW(mesoscopic_equilibria(m, 2.5), std::domain_error);
}

#pragma once

// Single-type linear birth-death processes: closed forms and samplers that
// serve as independent oracles for the full interacting simulator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "valley/fitness.hpp"
#include "valley/model.hpp"
#include "valley/rng.hpp"

namespace valley::bdp {

struct BDParams {
  double birth = 0.0;
  double death = 0.0;  // may include a frozen competition term c * nbar

  double rho() const { return birth / (birth + death); }
  double growth() const { return birth - death; }
};

// P(B = k) for the number of births B during an excursion started by one
// individual: Catalan(k) rho^k (1 - rho)^{k+1}.
inline double excursion_pmf(long long k, double birth, double death) {
  if (!(birth < death)) throw std::domain_error("excursion_pmf: process must be subcritical");
  if (k < 0) return 0.0;
  if (birth == 0.0) return k == 0 ? 1.0 : 0.0;
  const double rho = birth / (birth + death);
  const double kd = static_cast<double>(k);
  const double log_catalan = std::lgamma(2.0 * kd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(kd + 2.0);
  return std::exp(log_catalan + kd * std::log(rho) + (kd + 1.0) * std::log1p(-rho));
}

inline double excursion_mean(double birth, double death) {
  if (!(birth < death)) throw std::domain_error("excursion_mean: process must be subcritical");
  return birth / (death - birth);
}

struct Excursion {
  long long births = 0;
  double lifetime = 0.0;  // NaN unless requested
};

// Embedded-chain simulation from one founder until extinction. Holding
// times are drawn only when the lifetime is requested.
inline Excursion simulate_excursion(double birth, double death, Rng& rng, bool track_lifetime = false) {
  if (!(birth < death)) throw std::domain_error("simulate_excursion: process must be subcritical");
  Excursion e;
  if (!track_lifetime) e.lifetime = std::numeric_limits<double>::quiet_NaN();
  const double rho = birth / (birth + death);
  std::bernoulli_distribution is_birth(rho);
  long long n = 1;
  while (n > 0) {
    if (track_lifetime) e.lifetime += exponential(rng, static_cast<double>(n) * (birth + death));
    if (is_birth(rng)) {
      ++n;
      ++e.births;
    } else {
      --n;
    }
  }
  return e;
}

// P(Z(t) = 0 | Z(0) = 1) with per-capita birth B and death D:
// 1 - f e^{ft} / (B e^{ft} - D), f = B - D, which for f < 0 reads
// 1 - |f| e^{ft} / (D - B e^{ft}).
inline double extinction_cdf(double t, double B, double D) {
  if (B == D) throw std::domain_error("extinction_cdf: critical case B = D is excluded");
  if (t < 0.0) throw std::domain_error("extinction_cdf: negative time");
  const double f = B - D;
  const double e = std::exp(f * t);
  if (!std::isfinite(e)) return D / B;  // supercritical, t -> infinity
  return 1.0 - f * e / (B * e - D);
}

// (b - d)_+ / b: probability that a line never dies out.
inline double survival_probability(double birth, double death_eff) {
  if (!(birth > 0.0)) throw std::domain_error("survival_probability: birth must be positive");
  return std::max(birth - death_eff, 0.0) / birth;
}

// Supercritical line from one founder; survival is declared once the
// population reaches `cap` (residual extinction chance (d/b)^cap).
inline bool simulate_survival(double birth, double death, long long cap, Rng& rng) {
  std::bernoulli_distribution is_birth(birth / (birth + death));
  long long n = 1;
  while (n > 0 && n < cap) n += is_birth(rng) ? 1 : -1;
  return n > 0;
}

// Limit of Z(t) e^{-ft}: Ber(f/b) x Exp(rate f/b).
inline double sample_W(double birth, double death_eff, Rng& rng) {
  if (!(birth > death_eff)) throw std::domain_error("sample_W: process must be supercritical");
  const double q = (birth - death_eff) / birth;
  if (!(uniform01(rng) < q)) return 0.0;
  return exponential(rng, q);
}

// int_{t0}^{t1} f^K_{w,0}(u) du on the simulation clock, where phase i lasts
// lambda_K T_i.
inline double growth_exponent(const ModelSpec& model, const ScalingSpec& scaling, std::size_t w,
                              double t0, double t1) {
  if (t1 < t0) throw std::invalid_argument("growth_exponent: t0 must not exceed t1");
  const FitnessTable t = compute_fitness_table(model);
  const PeriodicStepFunction f(t.across_phases(w, 0), t.durations);
  return scaling.lambda_k * f.integral(t0 / scaling.lambda_k, t1 / scaling.lambda_k);
}

}  // namespace valley::bdp

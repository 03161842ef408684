#pragma once

// Closed-form crossing rates and time scales for fitness valleys in a
// periodically switching environment.
//
// Everything here is a pure function of the model; interval quantities are
// computed by exact piecewise-constant arithmetic, never by quadrature.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "valley/fitness.hpp"
#include "valley/landscape.hpp"
#include "valley/model.hpp"

namespace valley {

// Product of positive factors; switches to log space once any factor is
// far from 1 so that long chains neither overflow nor underflow early.
inline double guarded_product(std::span<const double> factors) {
  bool wide = false;
  for (double f : factors) {
    if (f == 0.0) return 0.0;
    if (std::abs(std::log(std::abs(f))) > 30.0) wide = true;
  }
  if (!wide) {
    double p = 1.0;
    for (double f : factors) p *= f;
    return p;
  }
  double log_sum = 0.0;
  int sign = 1;
  for (double f : factors) {
    log_sum += std::log(std::abs(f));
    if (f < 0.0) sign = -sign;
  }
  return sign * std::exp(log_sum);
}

// ---------------------------------------------------------------------------
// Expected birth events in a subcritical excursion.

inline double lambda_of_rho(double rho) {
  if (!(rho >= 0.0)) throw std::domain_error("lambda_of_rho: rho must be non-negative");
  if (!(rho < 0.5)) throw std::domain_error("lambda_of_rho: rho >= 1/2 is supercritical");
  return rho / (1.0 - 2.0 * rho);
}

// Partial sum of sum_{k>=1} (2k)!/((k-1)!(k+1)!) rho^k (1-rho)^{k+1}.
inline double lambda_series(double rho, std::size_t n_terms) {
  if (!(rho > 0.0)) return 0.0;
  if (!(rho < 1.0)) throw std::domain_error("lambda_series: rho must be below 1");
  const double lr = std::log(rho), l1r = std::log1p(-rho);
  double sum = 0.0;
  for (std::size_t k = 1; k <= n_terms; ++k) {
    const double kd = static_cast<double>(k);
    const double log_term = std::lgamma(2.0 * kd + 1.0) - std::lgamma(kd) - std::lgamma(kd + 2.0) +
                            kd * lr + (kd + 1.0) * l1r;
    sum += std::exp(log_term);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Arrival set A: times t in [0, P) such that int_t^{t+s} f > 0 for all
// s in (0, P].

struct Interval {
  double lo;
  double hi;  // half-open [lo, hi)
  double length() const { return hi - lo; }
};

struct ArrivalSet {
  std::vector<Interval> intervals;
  double period = 0.0;
  double total_measure = 0.0;

  bool empty() const { return intervals.empty(); }
  bool contains(double t) const {
    double r = t - std::floor(t / period) * period;
    if (r >= period) r = 0.0;
    for (const auto& iv : intervals)
      if (r >= iv.lo && r < iv.hi) return true;
    return false;
  }
  // |[a, b) intersect A| for 0 <= a <= b <= period.
  double measure_within(double a, double b) const {
    double m = 0.0;
    for (const auto& iv : intervals) m += std::max(0.0, std::min(b, iv.hi) - std::max(a, iv.lo));
    return m;
  }
};

// Exact evaluation of the defining predicate at a single time: since g is
// piecewise linear, min over s of g(t+s) - g(t) is attained either as s -> 0
// or at a breakpoint in (t, t+P].
inline bool in_arrival_set(const PeriodicStepFunction& f, double t) {
  if (!(f.value_at(t) > 0.0)) return false;
  const double P = f.period();
  const double base = std::floor(t / P) * P;
  const double gt = f.cumulative(t);
  for (int cycle = 0; cycle <= 1; ++cycle)
    for (std::size_t j = 0; j <= f.size(); ++j) {
      const double beta = base + cycle * P + f.start(j);
      if (beta <= t || beta > t + P) continue;
      if (!(f.cumulative(beta) > gt)) return false;
    }
  return f.cumulative(t + P) > gt;
}

inline ArrivalSet compute_arrival_set(std::span<const double> fitness_L,
                                      std::span<const double> durations) {
  for (double f : fitness_L)
    if (f == 0.0) throw std::domain_error("compute_arrival_set: f_L0 must be non-zero in every phase");
  const PeriodicStepFunction g({fitness_L.begin(), fitness_L.end()}, {durations.begin(), durations.end()});
  ArrivalSet out;
  out.period = g.period();
  if (!(g.average() > 0.0)) return out;

  const std::size_t ell = g.size();
  for (std::size_t j = 0; j < ell; ++j) {
    const double slope = g.value(j);
    if (slope < 0.0) continue;
    // Lowest value of g(beta) - g(phase start) over breakpoints beta in
    // (start, start + P], accumulated phase by phase.
    double rel = 0.0, lowest = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ell; ++k) {
      const std::size_t idx = (j + k) % ell;
      rel += g.value(idx) * g.duration(idx);
      lowest = std::min(lowest, rel);
    }
    if (!(lowest > 0.0)) continue;
    const double lo = g.start(j);
    const double hi = std::min(g.start(j + 1), lo + lowest / slope);
    if (!out.intervals.empty() && out.intervals.back().hi == lo)
      out.intervals.back().hi = hi;
    else
      out.intervals.push_back({lo, hi});
  }
  for (const auto& iv : out.intervals) out.total_measure += iv.length();
  return out;
}

// ---------------------------------------------------------------------------
// Strict valley.

struct PhaseRate {
  double resident = 0.0;          // nbar^i_0
  double mesoscopic_chain = 1.0;  // prod_{v=1}^{floor a} b^i_{v-1}/|f^i_{v,0}|
  double feeding_birth = 0.0;     // b^i_{floor a}
  double valley_chain = 1.0;      // prod_{w=floor a+1}^{L-1} lambda(rho^i_w)
  double survival = 0.0;          // (f^i_{L,0})_+ / b^i_L
  double rate = 0.0;              // R^i_L
};

struct RateReport {
  FitnessTable table;
  std::vector<std::vector<double>> rho;  // [phase][w], NaN outside the valley
  std::vector<std::vector<double>> lam;  // [phase][w]
  std::vector<PhaseRate> phases;
  std::vector<double> phase_rates;
  ArrivalSet arrival_set;
  double effective_rate = 0.0;
  double mutation_probability = 0.0;
  double timescale = std::numeric_limits<double>::infinity();
};

inline PhaseRate phase_crossing_rate(const ModelSpec& model, const FitnessTable& table,
                                     const ScalingSpec& scaling, std::size_t i) {
  const std::size_t L = model.num_traits;
  const std::size_t depth = scaling.mesoscopic_depth();
  if (depth >= L) throw std::domain_error("phase_crossing_rate: floor(alpha) must be below L");
  const auto& p = model.phases.at(i);
  PhaseRate r;
  r.resident = table.equilibria.at(i).at(0);

  std::vector<double> meso;
  for (std::size_t v = 1; v <= depth; ++v) {
    const double f = table.at(i, v, 0);
    if (f == 0.0) throw std::domain_error("phase_crossing_rate: zero fitness in denominator");
    meso.push_back(p.birth[v - 1] / std::abs(f));
  }
  r.mesoscopic_chain = guarded_product(meso);
  r.feeding_birth = p.birth[depth];

  std::vector<double> valley;
  for (std::size_t w = depth + 1; w < L; ++w) {
    const double f = table.at(i, w, 0);
    if (f == 0.0) throw std::domain_error("phase_crossing_rate: zero fitness in denominator");
    valley.push_back(p.birth[w] / std::abs(f));
  }
  r.valley_chain = guarded_product(valley);

  const double fl = table.at(i, L, 0);
  if (!(p.birth[L] > 0.0)) throw std::domain_error("phase_crossing_rate: b_L must be positive");
  r.survival = std::max(fl, 0.0) / p.birth[L];

  const double factors[] = {r.resident, r.mesoscopic_chain, r.feeding_birth, r.valley_chain, r.survival};
  r.rate = guarded_product(factors);
  return r;
}

inline double phase_crossing_rate(const ModelSpec& model, const ScalingSpec& scaling, std::size_t i) {
  return phase_crossing_rate(model, compute_fitness_table(model), scaling, i).rate;
}

inline double effective_crossing_rate(std::span<const double> phase_rates, const ArrivalSet& a,
                                      std::span<const double> durations) {
  if (phase_rates.size() != durations.size())
    throw std::invalid_argument("effective_crossing_rate: one rate per phase required");
  double start = 0.0, acc = 0.0, period = 0.0;
  for (double t : durations) period += t;
  for (std::size_t i = 0; i < phase_rates.size(); ++i) {
    acc += phase_rates[i] * a.measure_within(start, start + durations[i]);
    start += durations[i];
  }
  return acc / period;
}

// 1 / (K mu^L R); infinite when R = 0 ("no crossing predicted").
inline double strict_timescale(double rate, const ScalingSpec& scaling, std::size_t L) {
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  const double log_scale = std::log(static_cast<double>(scaling.carrying_capacity)) +
                           static_cast<double>(L) * std::log(scaling.mutation_probability()) +
                           std::log(rate);
  return std::exp(-log_scale);
}

inline RateReport strict_valley_report(const ModelSpec& model, const ScalingSpec& scaling) {
  RateReport rep;
  rep.table = compute_fitness_table(model);
  const std::size_t L = model.num_traits;
  const std::size_t ell = model.phase_count();
  const std::size_t depth = scaling.mesoscopic_depth();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.rho.assign(ell, std::vector<double>(L + 1, nan));
  rep.lam.assign(ell, std::vector<double>(L + 1, nan));
  for (std::size_t i = 0; i < ell; ++i) {
    const auto& p = model.phases[i];
    for (std::size_t w = depth + 1; w < L; ++w) {
      const double nbar0 = rep.table.equilibria[i][0];
      rep.rho[i][w] = p.birth[w] / (p.birth[w] + p.death[w] + p.competition[w][0] * nbar0);
      rep.lam[i][w] = p.birth[w] / std::abs(rep.table.at(i, w, 0));
    }
    rep.phases.push_back(phase_crossing_rate(model, rep.table, scaling, i));
    rep.phase_rates.push_back(rep.phases.back().rate);
  }
  const auto fl = rep.table.across_phases(L, 0);
  rep.arrival_set = compute_arrival_set(fl, rep.table.durations);
  rep.effective_rate = effective_crossing_rate(rep.phase_rates, rep.arrival_set, rep.table.durations);
  rep.mutation_probability = scaling.mutation_probability();
  rep.timescale = strict_timescale(rep.effective_rate, scaling, L);
  return rep;
}

inline double predicted_crossing_timescale(const RateReport& report, const ScalingSpec& scaling) {
  return strict_timescale(report.effective_rate, scaling, report.table.trait_count() - 1);
}

// ---------------------------------------------------------------------------
// Valley with a pit stop.

struct PitstopReport {
  FitnessTable table;
  std::size_t w = 0;
  double Lambda[2] = {1.0, 1.0};  // prod_{v=w+1}^{L-1} b^i_v/|f^i_{v,0}|
  double prefix = 0.0;  // nbar_0 * meso chain * b_{floor a} * prod_{z<w} lambda(rho^1_z)
  double fit_term = 0.0;    // (b^1_w/f^1_w) Lambda^1 f^1_L/b^1_L
  double unfit_term = 0.0;  // (b^2_w/|f^2_w|) Lambda^2 f^2_L/b^2_L
  double rate = 0.0;        // R^pitstop_L
  double peak_exponent = 0.0;  // lambda_K T_1 f^1_{w,0}
  double h_zero = 0.0;         // T_1 (1 + f^1_w/|f^2_w|), unrescaled
  double mutation_probability = 0.0;
  double timescale = std::numeric_limits<double>::infinity();
};

inline PitstopReport pitstop_crossing_rate(const ModelSpec& model, const ScalingSpec& scaling) {
  PitstopReport rep;
  rep.table = compute_fitness_table(model);
  const auto cls = classify_landscape(model, rep.table, scaling.alpha);
  if (!cls.pitstop())
    throw std::domain_error("pitstop_crossing_rate: landscape is not a pit-stop valley (" +
                            (cls.reason.empty() ? std::string(to_string(cls.regime)) : cls.reason) + ")");
  const auto& t = rep.table;
  const std::size_t L = model.num_traits, w = cls.pitstop_trait;
  const std::size_t depth = scaling.mesoscopic_depth();
  rep.w = w;
  const auto& p1 = model.phases[0];
  const auto& p2 = model.phases[1];

  std::vector<double> pre{t.equilibria[0][0]};
  for (std::size_t v = 1; v <= depth; ++v) pre.push_back(p1.birth[v - 1] / std::abs(t.at(0, v, 0)));
  pre.push_back(p1.birth[depth]);
  for (std::size_t z = depth + 1; z < w; ++z) pre.push_back(p1.birth[z] / std::abs(t.at(0, z, 0)));
  rep.prefix = guarded_product(pre);

  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> chain;
    for (std::size_t z = w + 1; z < L; ++z)
      chain.push_back(model.phases[i].birth[z] / std::abs(t.at(i, z, 0)));
    rep.Lambda[i] = guarded_product(chain);
  }
  const double f1 = t.at(0, w, 0), f2 = t.at(1, w, 0);
  rep.fit_term = (p1.birth[w] / f1) * rep.Lambda[0] * (t.at(0, L, 0) / p1.birth[L]);
  rep.unfit_term = (p2.birth[w] / std::abs(f2)) * rep.Lambda[1] * (t.at(1, L, 0) / p2.birth[L]);
  const double period = p1.duration + p2.duration;
  const double factors[] = {rep.prefix, 1.0 / f1, rep.fit_term + rep.unfit_term, 1.0 / period};
  rep.rate = guarded_product(factors);

  rep.peak_exponent = scaling.lambda_k * p1.duration * f1;
  rep.h_zero = p1.duration * (1.0 + f1 / std::abs(f2));
  rep.mutation_probability = scaling.mutation_probability();
  if (rep.rate > 0.0) {
    const double log_ts = std::log(scaling.lambda_k) - rep.peak_exponent -
                          std::log(static_cast<double>(scaling.carrying_capacity)) -
                          static_cast<double>(L) * std::log(rep.mutation_probability) - std::log(rep.rate);
    rep.timescale = std::exp(log_ts);
  }
  return rep;
}

inline double predicted_crossing_timescale(const PitstopReport& report, const ScalingSpec&) {
  return report.timescale;
}

// ---------------------------------------------------------------------------
// Largest transient growth exponent g_w(t, s) = int_t^{t+s} f_w over one
// period, subject to g_w(t, s') > 0 for all s' in (0, s].

struct GrowthProfile {
  double t_star = 0.0;
  double s_star = 0.0;
  double peak = 0.0;
};

inline GrowthProfile pitstop_growth_profile(std::span<const double> fitness_w,
                                            std::span<const double> durations) {
  const PeriodicStepFunction f({fitness_w.begin(), fitness_w.end()}, {durations.begin(), durations.end()});
  if (!(f.average() < 0.0))
    throw std::domain_error("pitstop_growth_profile: average fitness must be negative");
  GrowthProfile best;
  const std::size_t ell = f.size();
  for (std::size_t j = 0; j < ell; ++j) {
    if (!(f.value(j) > 0.0)) continue;
    // Walk breakpoints forward from the start of fit phase j; the running
    // integral must stay positive at every breakpoint passed.
    double g = 0.0, s = 0.0;
    for (std::size_t k = 0; k < ell; ++k) {
      const std::size_t idx = (j + k) % ell;
      g += f.value(idx) * f.duration(idx);
      s += f.duration(idx);
      if (!(g > 0.0)) break;
      if (g > best.peak) best = {f.start(j), s, g};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Mesoscopic equilibria a^i_v = nbar^i_0 prod_{u=1}^{v} b^i_{u-1}/|f^i_{u,0}|,
// so that N_v ~ a^i_v K mu^v inside phase i.

struct MesoscopicTable {
  std::vector<std::vector<double>> a;  // [phase][v], v = 0..floor(alpha)

  double at(std::size_t phase, std::size_t v) const { return a.at(phase).at(v); }
};

inline MesoscopicTable mesoscopic_equilibria(const ModelSpec& model, double alpha) {
  const auto depth = static_cast<std::size_t>(std::floor(alpha));
  if (depth >= model.trait_count())
    throw std::domain_error("mesoscopic_equilibria: floor(alpha) exceeds L");
  const FitnessTable t = compute_fitness_table(model);
  MesoscopicTable out;
  for (std::size_t i = 0; i < model.phase_count(); ++i) {
    std::vector<double> row{t.equilibria[i][0]};
    if (!(row[0] > 0.0)) throw std::domain_error("mesoscopic_equilibria: resident equilibrium not positive");
    for (std::size_t v = 1; v <= depth; ++v) {
      const double f = t.at(i, v, 0);
      if (!(f < 0.0)) throw std::domain_error("mesoscopic_equilibria: mesoscopic trait is not unfit");
      row.push_back(row.back() * model.phases[i].birth[v - 1] / std::abs(f));
    }
    out.a.push_back(std::move(row));
  }
  return out;
}

}  // namespace valley

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "valley/model.hpp"

namespace valley {

// Equilibrium density of a single-type logistic population, (b - d) / c.
// The caller decides whether a non-positive value is meaningful.
inline double monomorphic_equilibrium(double birth, double death, double c_self) {
  if (!(c_self > 0.0))
    throw std::invalid_argument("monomorphic_equilibrium: self-competition must be positive");
  return (birth - death) / c_self;
}

inline double equilibrium(const ModelSpec& model, std::size_t v, std::size_t phase) {
  const auto& p = model.phases.at(phase);
  return monomorphic_equilibrium(p.birth.at(v), p.death.at(v), p.competition.at(v).at(v));
}

// Initial per-capita growth rate of a rare w-population against resident v
// at its phase equilibrium.
inline double invasion_fitness(const ModelSpec& model, std::size_t w, std::size_t v,
                               std::size_t phase) {
  const double resident = equilibrium(model, v, phase);
  if (!(resident > 0.0))
    throw std::domain_error("invasion_fitness: resident equilibrium is not positive");
  const auto& p = model.phases[phase];
  return p.birth.at(w) - p.death.at(w) - p.competition.at(w).at(v) * resident;
}

inline double average_fitness(std::span<const double> fitness, std::span<const double> durations) {
  if (fitness.empty() || fitness.size() != durations.size())
    throw std::invalid_argument("average_fitness: need one fitness per phase");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    num += fitness[i] * durations[i];
    den += durations[i];
  }
  return num / den;
}

struct FitnessTable {
  // equilibria[i][v] = nbar^i_v (may be <= 0)
  std::vector<std::vector<double>> equilibria;
  // fitness[i][w][v] = f^i_{w,v}; empty when nbar^i_v <= 0
  std::vector<std::vector<std::vector<std::optional<double>>>> fitness;
  // f^av_{w,0}; empty when some nbar^i_0 <= 0
  std::vector<std::optional<double>> average;
  std::vector<double> durations;

  std::size_t phase_count() const { return equilibria.size(); }
  std::size_t trait_count() const { return equilibria.empty() ? 0 : equilibria[0].size(); }

  double at(std::size_t phase, std::size_t w, std::size_t v) const {
    const auto& f = fitness.at(phase).at(w).at(v);
    if (!f) throw std::domain_error("fitness undefined: resident equilibrium is not positive");
    return *f;
  }
  bool defined(std::size_t phase, std::size_t w, std::size_t v) const {
    return fitness.at(phase).at(w).at(v).has_value();
  }
  double avg(std::size_t w) const {
    if (!average.at(w)) throw std::domain_error("average fitness undefined");
    return *average[w];
  }
  // f^i_{w,v} for every phase i.
  std::vector<double> across_phases(std::size_t w, std::size_t v) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < phase_count(); ++i) out.push_back(at(i, w, v));
    return out;
  }
};

inline FitnessTable compute_fitness_table(const ModelSpec& model) {
  FitnessTable t;
  const std::size_t n = model.trait_count();
  const std::size_t ell = model.phase_count();
  t.durations = model.durations();
  t.equilibria.assign(ell, std::vector<double>(n));
  t.fitness.assign(ell, std::vector<std::vector<std::optional<double>>>(
                            n, std::vector<std::optional<double>>(n)));
  for (std::size_t i = 0; i < ell; ++i) {
    for (std::size_t v = 0; v < n; ++v) t.equilibria[i][v] = equilibrium(model, v, i);
    for (std::size_t v = 0; v < n; ++v) {
      if (!(t.equilibria[i][v] > 0.0)) continue;
      for (std::size_t w = 0; w < n; ++w) t.fitness[i][w][v] = invasion_fitness(model, w, v, i);
    }
  }
  t.average.assign(n, std::nullopt);
  bool resident_ok = true;
  for (std::size_t i = 0; i < ell; ++i) resident_ok = resident_ok && t.equilibria[i][0] > 0.0;
  if (resident_ok)
    for (std::size_t w = 0; w < n; ++w) {
      const auto f = t.across_phases(w, 0);
      t.average[w] = average_fitness(f, t.durations);
    }
  return t;
}

// Periodic right-continuous step function on the unrescaled clock, with
// exact integrals. Used for g(t) = int_0^t f(u) du.
class PeriodicStepFunction {
 public:
  PeriodicStepFunction(std::vector<double> values, std::vector<double> durations)
      : values_(std::move(values)), durations_(std::move(durations)) {
    if (values_.empty() || values_.size() != durations_.size())
      throw std::invalid_argument("PeriodicStepFunction: need one value per phase");
    starts_.assign(1, 0.0);
    prefix_.assign(1, 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!(durations_[i] > 0.0))
        throw std::invalid_argument("PeriodicStepFunction: durations must be positive");
      starts_.push_back(starts_.back() + durations_[i]);
      prefix_.push_back(prefix_.back() + values_[i] * durations_[i]);
    }
  }

  std::size_t size() const { return values_.size(); }
  double period() const { return starts_.back(); }
  double value(std::size_t i) const { return values_[i]; }
  double duration(std::size_t i) const { return durations_[i]; }
  // Start of phase i within the period, i = 0..size() (size() gives the period).
  double start(std::size_t i) const { return starts_[i]; }
  double period_integral() const { return prefix_.back(); }
  double average() const { return prefix_.back() / period(); }

  std::size_t phase_of(double t) const {
    const double r = reduce(t);
    std::size_t i = 0;
    while (i + 1 < size() && r >= starts_[i + 1]) ++i;
    return i;
  }
  double value_at(double t) const { return values_[phase_of(t)]; }

  // g(t) = int_0^t f(u) du for any real t (negative t integrates backwards).
  double cumulative(double t) const {
    const double cycles = std::floor(t / period());
    double r = t - cycles * period();
    if (r >= period()) r = 0.0;  // rounding guard
    if (r < 0.0) r = 0.0;
    const std::size_t i = phase_of_reduced(r);
    return cycles * period_integral() + prefix_[i] + values_[i] * (r - starts_[i]);
  }

  double integral(double t0, double t1) const { return cumulative(t1) - cumulative(t0); }

 private:
  double reduce(double t) const {
    double r = t - std::floor(t / period()) * period();
    if (r >= period() || r < 0.0) r = 0.0;
    return r;
  }
  std::size_t phase_of_reduced(double r) const {
    std::size_t i = 0;
    while (i + 1 < size() && r >= starts_[i + 1]) ++i;
    return i;
  }

  std::vector<double> values_;
  std::vector<double> durations_;
  std::vector<double> starts_;
  std::vector<double> prefix_;
};

}  // namespace valley

#pragma once

// Exact event-driven simulation of the multi-type logistic birth-death
// process with mutation and piecewise-constant periodic rates.
//
// Rates are constant between phase boundaries, so the next event time is
// drawn from Exp(total_rate); if it lands past the next boundary the clock is
// moved to the boundary instead and nothing happens (memorylessness makes the
// discarded draw irrelevant). Mutation is resolved at birth time: a birth of
// a v-individual yields a mutant with probability mu, whose trait is drawn
// from m_{v,.}. Summing over parents this reproduces the generator's rates
// N_v b_v (1 - mu) + sum_w N_w b_w mu m_{w,v} for the appearance of a
// v-individual, with two channels per trait instead of (L+1)^2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "valley/fitness.hpp"
#include "valley/model.hpp"
#include "valley/rng.hpp"

namespace valley {

// Rate tables flattened per phase, ready for the event loop.
struct Dynamics {
  std::size_t traits = 0;  // L + 1
  std::size_t phases = 0;
  std::vector<double> birth;       // [phase * n + v]
  std::vector<double> death;       // [phase * n + v]
  std::vector<double> comp_by_src; // [phase * n * n + w * n + v] = c^i_{v,w} / K
  std::vector<double> target_L;    // nbar^i_L per phase
  std::vector<double> kernel_cdf;  // [v * n + w]
  bool forward_kernel = true;
  double mutation_probability = 0.0;
  double carrying_capacity = 1.0;
  PhaseClock clock;

  double b(std::size_t phase, std::size_t v) const { return birth[phase * traits + v]; }
  double d(std::size_t phase, std::size_t v) const { return death[phase * traits + v]; }
  // competition felt by v from one w-individual, already divided by K
  double c(std::size_t phase, std::size_t v, std::size_t w) const {
    return comp_by_src[(phase * traits + w) * traits + v];
  }
};

inline Dynamics make_dynamics(const ModelSpec& model, const ScalingSpec& scaling,
                              double mutation_probability) {
  if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0))
    throw std::invalid_argument("make_dynamics: mutation probability outside [0, 1]");
  Dynamics dyn;
  const std::size_t n = model.trait_count();
  dyn.traits = n;
  dyn.phases = model.phase_count();
  dyn.carrying_capacity = static_cast<double>(scaling.carrying_capacity);
  dyn.mutation_probability = mutation_probability;
  dyn.clock = PhaseClock(model, scaling);
  dyn.birth.resize(dyn.phases * n);
  dyn.death.resize(dyn.phases * n);
  dyn.comp_by_src.resize(dyn.phases * n * n);
  for (std::size_t i = 0; i < dyn.phases; ++i) {
    const auto& p = model.phases[i];
    for (std::size_t v = 0; v < n; ++v) {
      dyn.birth[i * n + v] = p.birth.at(v);
      dyn.death[i * n + v] = p.death.at(v);
      for (std::size_t w = 0; w < n; ++w)
        dyn.comp_by_src[(i * n + w) * n + v] = p.competition.at(v).at(w) / dyn.carrying_capacity;
    }
    const double cLL = p.competition[n - 1][n - 1];
    dyn.target_L.push_back(cLL > 0.0 ? (p.birth[n - 1] - p.death[n - 1]) / cLL
                                     : std::numeric_limits<double>::infinity());
  }
  dyn.forward_kernel = model.has_default_kernel();
  const Matrix kernel = model.mutation_kernel();
  dyn.kernel_cdf.resize(n * n);
  for (std::size_t v = 0; v < n; ++v) {
    double acc = 0.0;
    for (std::size_t w = 0; w < n; ++w) {
      acc += kernel[v][w];
      dyn.kernel_cdf[v * n + w] = acc;
    }
  }
  return dyn;
}

inline Dynamics make_dynamics(const ModelSpec& model, const ScalingSpec& scaling) {
  return make_dynamics(model, scaling, scaling.mutation_probability());
}

struct PopulationState {
  std::vector<long long> counts;  // N^K_v
  double time = 0.0;
  std::vector<double> comp_load;  // sum_w c^i_{v,w} N_w / K
  double total_rate = 0.0;
  std::size_t phase = 0;
  long long cycle = 0;
  double next_boundary = 0.0;
  std::uint64_t events = 0;
  double max_audit_error = 0.0;  // worst relative cache drift seen at an audit
};

// Rates of all 2(L+1) channels, recomputed from scratch.
struct ChannelRates {
  std::vector<double> birth;
  std::vector<double> death;
  double total = 0.0;
};

inline std::vector<double> competition_load(const std::vector<long long>& counts, const Dynamics& dyn,
                                            std::size_t phase) {
  const std::size_t n = dyn.traits;
  std::vector<double> load(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    double s = 0.0;
    for (std::size_t w = 0; w < n; ++w) s += dyn.c(phase, v, w) * static_cast<double>(counts[w]);
    load[v] = s;
  }
  return load;
}

inline ChannelRates event_rates(const PopulationState& state, const Dynamics& dyn) {
  const std::size_t n = dyn.traits;
  ChannelRates r;
  r.birth.resize(n);
  r.death.resize(n);
  const auto load = competition_load(state.counts, dyn, state.phase);
  for (std::size_t v = 0; v < n; ++v) {
    const double nv = static_cast<double>(state.counts[v]);
    r.birth[v] = nv * dyn.b(state.phase, v);
    r.death[v] = nv * (dyn.d(state.phase, v) + load[v]);
    r.total += r.birth[v] + r.death[v];
  }
  return r;
}

inline PopulationState make_state(const Dynamics& dyn, std::vector<long long> counts, double t0 = 0.0) {
  if (counts.size() != dyn.traits) throw std::invalid_argument("make_state: need L+1 counts");
  for (long long c : counts)
    if (c < 0) throw std::invalid_argument("make_state: negative count");
  PopulationState s;
  s.counts = std::move(counts);
  s.time = t0;
  const auto pos = dyn.clock.phase_at(t0);
  s.phase = pos.phase;
  s.cycle = pos.cycle;
  s.next_boundary = dyn.clock.phase_start(s.cycle, s.phase + 1);
  s.comp_load = competition_load(s.counts, dyn, s.phase);
  s.total_rate = event_rates(s, dyn).total;
  return s;
}

// N_0 = floor(nbar^1_0 K), all other traits empty.
inline PopulationState initial_state(const ModelSpec& model, const ScalingSpec& scaling,
                                     const Dynamics& dyn) {
  const double nbar = equilibrium(model, 0, 0);
  if (!(nbar > 0.0)) throw std::domain_error("initial_state: resident equilibrium must be positive");
  std::vector<long long> counts(model.trait_count(), 0);
  counts[0] = static_cast<long long>(std::floor(nbar * static_cast<double>(scaling.carrying_capacity)));
  return make_state(dyn, std::move(counts));
}

inline PopulationState initial_state(const ModelSpec& model, const ScalingSpec& scaling) {
  return initial_state(model, scaling, make_dynamics(model, scaling));
}

struct StepOutcome {
  enum class Kind { Birth, Mutation, Death, Boundary, Horizon, Absorbed };
  Kind kind = Kind::Absorbed;
  std::size_t trait = 0;   // trait whose count changed
  std::size_t parent = 0;  // parent trait for births and mutations
};

struct StopSpec {
  double invasion_epsilon = 0.0;     // T_inv; <= 0 disables
  double mutant_mass_epsilon = 0.0;  // S^{(K,eps)}; <= 0 disables
  double max_time = std::numeric_limits<double>::infinity();
  std::uint64_t max_events = std::numeric_limits<std::uint64_t>::max();
};

enum class StopReason { Invasion, MutantMass, MaxTime, MaxEvents, Extinction, Observer };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Invasion: return "invasion";
    case StopReason::MutantMass: return "mutant_mass";
    case StopReason::MaxTime: return "max_time";
    case StopReason::MaxEvents: return "max_events";
    case StopReason::Extinction: return "extinction";
    case StopReason::Observer: return "observer";
  }
  return "unknown";
}

struct TrajectorySample {
  double time;
  std::vector<long long> counts;
  std::size_t phase;
};

struct Observables {
  std::vector<TrajectorySample> trajectory;
  std::vector<double> first_arrival;  // NaN if the trait never appeared
  std::vector<long long> peak;
  bool invasion_hit = false;
  bool mutant_mass_hit = false;
};

struct RunResult {
  StopReason reason = StopReason::MaxTime;
  Observables observables;
  PopulationState final_state;
};

struct NoObserver {
  bool operator()(const PopulationState&, const StepOutcome&) const { return true; }
};

class Simulator {
 public:
  static constexpr std::uint64_t kAuditInterval = std::uint64_t{1} << 20;

  Simulator(Dynamics dyn, PopulationState state) : dyn_(std::move(dyn)), s_(std::move(state)) {
    if (s_.counts.size() != dyn_.traits) throw std::invalid_argument("Simulator: state/model size mismatch");
    birth_rate_.assign(dyn_.traits, 0.0);
    death_rate_.assign(dyn_.traits, 0.0);
    refresh_rates();
    rebuild_sums();
  }

  const PopulationState& state() const { return s_; }
  const Dynamics& dynamics() const { return dyn_; }
  double birth_rate(std::size_t v) const { return birth_rate_[v]; }
  double death_rate(std::size_t v) const { return death_rate_[v]; }

  // One SSA step, never advancing past `horizon`. `pre_jump(t_new)` is
  // called before the state changes, with the time the change happens at.
  template <class PreJump>
  StepOutcome step(Rng& rng, double horizon, PreJump&& pre_jump) {
    StepOutcome out;
    const double total = s_.total_rate;
    if (total <= 0.0 && population() == 0) {
      out.kind = StepOutcome::Kind::Absorbed;
      return out;
    }
    const double wait = total > 0.0 ? exponential(rng, total) : std::numeric_limits<double>::infinity();
    const double t_new = s_.time + wait;
    if (std::min(t_new, s_.next_boundary) >= horizon) {
      pre_jump(horizon);
      s_.time = horizon;
      out.kind = StepOutcome::Kind::Horizon;
      return out;
    }
    if (t_new >= s_.next_boundary) {
      pre_jump(s_.next_boundary);
      cross_boundary();
      out.kind = StepOutcome::Kind::Boundary;
      return out;
    }
    pre_jump(t_new);
    s_.time = t_new;
    ++s_.events;

    double u = uniform01(rng) * total;
    const std::size_t n = dyn_.traits;
    std::size_t chosen = n;  // births are channels [0, n), deaths [n, 2n)
    for (std::size_t v = 0; v < n && chosen == n; ++v) {
      if (u < birth_rate_[v]) chosen = v;
      else u -= birth_rate_[v];
    }
    if (chosen == n) {
      chosen = 2 * n;
      for (std::size_t v = 0; v < n && chosen == 2 * n; ++v) {
        if (u < death_rate_[v]) chosen = n + v;
        else u -= death_rate_[v];
      }
      if (chosen == 2 * n) chosen = last_active_channel();  // rounding at the top end
    }

    if (chosen < n) {
      const std::size_t parent = chosen;
      std::size_t child = parent;
      if (dyn_.mutation_probability > 0.0 && uniform01(rng) < dyn_.mutation_probability)
        child = mutant_trait(parent, rng);
      apply(child, +1);
      out.kind = child == parent ? StepOutcome::Kind::Birth : StepOutcome::Kind::Mutation;
      out.trait = child;
      out.parent = parent;
    } else {
      const std::size_t v = chosen - n;
      apply(v, -1);
      out.kind = StepOutcome::Kind::Death;
      out.trait = v;
      out.parent = v;
    }
    if (s_.events % kAuditInterval == 0) audit();
    return out;
  }

  StepOutcome step(Rng& rng, double horizon = std::numeric_limits<double>::infinity()) {
    return step(rng, horizon, [](double) {});
  }

  // Runs until a stopping condition fires. The observer sees every step and
  // may request a stop by returning false. `sample_stride` <= 0 disables
  // trajectory recording.
  template <class Observer = NoObserver>
  RunResult run(const StopSpec& stop, Rng& rng, double sample_stride, Observer&& observer = {}) {
    RunResult res;
    auto& obs = res.observables;
    const std::size_t n = dyn_.traits;
    obs.first_arrival.assign(n, std::numeric_limits<double>::quiet_NaN());
    obs.peak.assign(s_.counts.begin(), s_.counts.end());
    for (std::size_t v = 0; v < n; ++v)
      if (s_.counts[v] > 0) obs.first_arrival[v] = s_.time;

    const bool sampling = sample_stride > 0.0;
    double next_sample = s_.time;
    auto record_until = [&](double t_new, bool inclusive) {
      if (!sampling) return;
      while (next_sample < t_new || (inclusive && next_sample <= t_new)) {
        if (next_sample > stop.max_time) return;
        obs.trajectory.push_back({next_sample, s_.counts, s_.phase});
        next_sample += sample_stride;
      }
    };

    auto stopped = [&](StopReason r) {
      res.reason = r;
      record_until(s_.time, true);
      res.final_state = s_;
      return res;
    };

    if (invasion_reached(stop)) {
      obs.invasion_hit = true;
      return stopped(StopReason::Invasion);
    }
    while (true) {
      if (s_.events >= stop.max_events) return stopped(StopReason::MaxEvents);
      const StepOutcome out = step(rng, stop.max_time, [&](double t_new) { record_until(t_new, false); });
      switch (out.kind) {
        case StepOutcome::Kind::Absorbed: return stopped(StopReason::Extinction);
        case StepOutcome::Kind::Horizon: return stopped(StopReason::MaxTime);
        case StepOutcome::Kind::Boundary: break;
        default: {
          const std::size_t v = out.trait;
          if (s_.counts[v] > obs.peak[v]) obs.peak[v] = s_.counts[v];
          if (s_.counts[v] == 1 && std::isnan(obs.first_arrival[v])) obs.first_arrival[v] = s_.time;
        }
      }
      if (!observer(s_, out)) return stopped(StopReason::Observer);
      if (invasion_reached(stop)) {
        obs.invasion_hit = true;
        return stopped(StopReason::Invasion);
      }
      if (stop.mutant_mass_epsilon > 0.0 &&
          static_cast<double>(mutant_total_) >= stop.mutant_mass_epsilon * dyn_.carrying_capacity) {
        obs.mutant_mass_hit = true;
        return stopped(StopReason::MutantMass);
      }
    }
  }

  // Recomputes the competition cache from scratch and records the drift.
  void audit() {
    const auto fresh = competition_load(s_.counts, dyn_, s_.phase);
    double scale = 0.0;
    for (std::size_t v = 0; v < dyn_.traits; ++v)
      for (std::size_t w = 0; w < dyn_.traits; ++w) scale = std::max(scale, dyn_.c(s_.phase, v, w));
    for (std::size_t v = 0; v < dyn_.traits; ++v) {
      const double err = std::abs(s_.comp_load[v] - fresh[v]) / (std::abs(fresh[v]) + scale);
      s_.max_audit_error = std::max(s_.max_audit_error, err);
    }
    const double cached_total = s_.total_rate;
    s_.comp_load = fresh;
    refresh_rates();
    const double err = std::abs(cached_total - s_.total_rate) / std::max(s_.total_rate, 1e-300);
    s_.max_audit_error = std::max(s_.max_audit_error, s_.total_rate > 0.0 ? err : 0.0);
  }

  long long population() const { return population_; }

 private:
  std::size_t mutant_trait(std::size_t parent, Rng& rng) const {
    const std::size_t n = dyn_.traits;
    if (dyn_.forward_kernel) return std::min(parent + 1, n - 1);
    const double u = uniform01(rng);
    const double* row = &dyn_.kernel_cdf[parent * n];
    for (std::size_t w = 0; w < n; ++w)
      if (u < row[w]) return w;
    return n - 1;
  }

  std::size_t last_active_channel() const {
    const std::size_t n = dyn_.traits;
    for (std::size_t v = n; v-- > 0;)
      if (death_rate_[v] > 0.0) return n + v;
    for (std::size_t v = n; v-- > 0;)
      if (birth_rate_[v] > 0.0) return v;
    return 0;
  }

  void apply(std::size_t u, int delta) {
    const std::size_t n = dyn_.traits;
    s_.counts[u] += delta;
    population_ += delta;
    if (u != 0) mutant_total_ += delta;
    const double* col = &dyn_.comp_by_src[(s_.phase * n + u) * n];
    const double sign = static_cast<double>(delta);
    for (std::size_t v = 0; v < n; ++v) s_.comp_load[v] += sign * col[v];
    refresh_rates();
  }

  void refresh_rates() {
    const std::size_t n = dyn_.traits;
    const std::size_t base = s_.phase * n;
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double nv = static_cast<double>(s_.counts[v]);
      const double load = std::max(s_.comp_load[v], 0.0);
      birth_rate_[v] = nv * dyn_.birth[base + v];
      death_rate_[v] = nv * (dyn_.death[base + v] + load);
      total += birth_rate_[v] + death_rate_[v];
    }
    s_.total_rate = total;
  }

  void rebuild_sums() {
    population_ = 0;
    mutant_total_ = 0;
    for (std::size_t v = 0; v < dyn_.traits; ++v) {
      population_ += s_.counts[v];
      if (v != 0) mutant_total_ += s_.counts[v];
    }
  }

  void cross_boundary() {
    s_.time = s_.next_boundary;
    ++s_.phase;
    if (s_.phase == dyn_.phases) {
      s_.phase = 0;
      ++s_.cycle;
    }
    s_.next_boundary = dyn_.clock.phase_start(s_.cycle, s_.phase + 1);
    s_.comp_load = competition_load(s_.counts, dyn_, s_.phase);
    refresh_rates();
  }

  // |N_L/K - nbar_L(t)| < eps and sum_{j<L} N_j / K < eps, against the
  // current (incoming at a boundary) phase's equilibrium.
  bool invasion_reached(const StopSpec& stop) const {
    if (!(stop.invasion_epsilon > 0.0)) return false;
    const std::size_t L = dyn_.traits - 1;
    const double K = dyn_.carrying_capacity;
    const double others = static_cast<double>(population_ - s_.counts[L]) / K;
    if (!(others < stop.invasion_epsilon)) return false;
    return std::abs(static_cast<double>(s_.counts[L]) / K - dyn_.target_L[s_.phase]) < stop.invasion_epsilon;
  }

  Dynamics dyn_;
  PopulationState s_;
  std::vector<double> birth_rate_;
  std::vector<double> death_rate_;
  long long population_ = 0;
  long long mutant_total_ = 0;
};

// Default sampling stride: lambda_K / 100 time units.
inline double default_sample_stride(const Dynamics& dyn) { return dyn.clock.lambda_k() / 100.0; }

}  // namespace valley

#pragma once

// Replicated Monte Carlo experiments that compare the simulator against the
// closed-form predictions. Replica i draws from make_stream(base_seed, i)
// only, and results are stored by index, so a SummaryStats does not depend on
// the worker count or on completion order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "valley/bdp.hpp"
#include "valley/engine.hpp"
#include "valley/landscape.hpp"
#include "valley/model.hpp"
#include "valley/ode.hpp"
#include "valley/rng.hpp"
#include "valley/stats.hpp"
#include "valley/theory.hpp"

namespace valley::harness {

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Evaluates fn(i) for i in [0, n) on up to `workers` threads.
template <class Result, class Fn>
std::vector<Result> run_replicas(std::size_t n, unsigned workers, Fn&& fn) {
  std::vector<Result> out(n);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n;
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

struct Criterion {
  std::string name;
  double value = 0.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool pass = false;
  bool informational = false;
};

inline Criterion within(std::string name, double value, double lo, double hi, bool informational = false) {
  return {std::move(name), value, lo, hi, value >= lo && value <= hi, informational};
}

struct SummaryStats {
  std::string kind;
  std::size_t replicas = 0;
  std::size_t censored = 0;
  bool censoring_flagged = false;  // more than 5% censored
  std::vector<double> samples;     // per-replica primary statistic
  double mean = std::numeric_limits<double>::quiet_NaN();
  stats::Interval95 ci;
  double predicted_mean = std::numeric_limits<double>::quiet_NaN();
  std::optional<stats::KsResult> ks;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> notes;
  std::vector<Criterion> criteria;

  bool passed() const {
    for (const auto& c : criteria)
      if (!c.informational && !c.pass) return false;
    return true;
  }
  double metric(const std::string& key) const {
    for (const auto& [k, v] : metrics)
      if (k == key) return v;
    throw std::out_of_range("metric not found: " + key);
  }
  void put(std::string key, double v) { metrics.emplace_back(std::move(key), v); }
};

inline void require_valid(const ModelSpec& model, const ScalingSpec& scaling) {
  const auto v = validate_model(model, scaling);
  if (!v.empty()) throw std::invalid_argument("invalid model: " + v.front().str());
}

// ---------------------------------------------------------------------------
// Crossing times.

struct CrossingSpec {
  ModelSpec model;
  ScalingSpec scaling;
  StopSpec stop{0.1, 0.0, std::numeric_limits<double>::infinity(), 2'000'000'000ULL};
  std::size_t replicas = 100;
  std::uint64_t base_seed = 1;
  unsigned workers = default_workers();
  double ks_alpha = 0.01;
  double mean_factor = 2.0;  // accept mean within [1/f, f] of prediction
};

struct CrossingReplica {
  bool censored = true;
  double time = 0.0;
  double rescaled = 0.0;
  std::uint64_t events = 0;
  double founder_time = std::numeric_limits<double>::quiet_NaN();  // last L founding before invasion
};

struct CrossingPrediction {
  Classification cls;
  double rate = 0.0;
  double time_scale = 1.0;  // multiply T_inv by this to get the rescaled time
};

inline CrossingPrediction predict_crossing(const ModelSpec& model, const ScalingSpec& scaling) {
  CrossingPrediction p;
  p.cls = classify_landscape(model, scaling);
  const double K = static_cast<double>(scaling.carrying_capacity);
  const double log_k_mu_l = std::log(K) + static_cast<double>(model.num_traits) *
                                               std::log(scaling.mutation_probability());
  if (p.cls.strict()) {
    p.rate = strict_valley_report(model, scaling).effective_rate;
    p.time_scale = std::exp(log_k_mu_l);
  } else if (p.cls.pitstop()) {
    const auto rep = pitstop_crossing_rate(model, scaling);
    p.rate = rep.rate;
    p.time_scale = std::exp(log_k_mu_l + rep.peak_exponent - std::log(scaling.lambda_k));
  } else {
    throw std::domain_error("crossing experiment needs a strict or pit-stop valley: " + p.cls.reason);
  }
  return p;
}

inline SummaryStats run_crossing_experiment(const CrossingSpec& spec) {
  require_valid(spec.model, spec.scaling);
  const auto pred = predict_crossing(spec.model, spec.scaling);
  const Dynamics dyn = make_dynamics(spec.model, spec.scaling);
  const PopulationState start = initial_state(spec.model, spec.scaling, dyn);
  const std::size_t L = spec.model.num_traits;

  auto one = [&](std::size_t i) {
    Rng rng = make_stream(spec.base_seed, i);
    Simulator sim(dyn, start);
    double founder = std::numeric_limits<double>::quiet_NaN();
    auto track = [&](const PopulationState& s, const StepOutcome& o) {
      if (o.kind == StepOutcome::Kind::Mutation && o.trait == L && s.counts[L] == 1) founder = s.time;
      return true;
    };
    const auto res = sim.run(spec.stop, rng, 0.0, track);
    CrossingReplica r;
    r.events = res.final_state.events;
    if (res.reason == StopReason::Invasion) {
      r.censored = false;
      r.time = res.final_state.time;
      r.rescaled = r.time * pred.time_scale;
      r.founder_time = founder;
    }
    return r;
  };
  const auto reps = run_replicas<CrossingReplica>(spec.replicas, spec.workers, one);

  SummaryStats out;
  out.kind = pred.cls.pitstop() ? "crossing_pitstop" : "crossing_strict";
  out.replicas = spec.replicas;
  std::uint64_t events = 0;
  std::size_t founders_in_a = 0, founders = 0;
  const ArrivalSet arrival = pred.cls.strict() ? strict_valley_report(spec.model, spec.scaling).arrival_set
                                               : ArrivalSet{};
  for (const auto& r : reps) {
    events += r.events;
    if (r.censored) {
      ++out.censored;
      continue;
    }
    out.samples.push_back(r.rescaled);
    if (pred.cls.strict() && !std::isnan(r.founder_time)) {
      ++founders;
      if (arrival.contains(r.founder_time / spec.scaling.lambda_k)) ++founders_in_a;
    }
  }
  out.censoring_flagged = static_cast<double>(out.censored) > 0.05 * static_cast<double>(spec.replicas);
  out.predicted_mean = pred.rate > 0.0 ? 1.0 / pred.rate : std::numeric_limits<double>::infinity();
  out.put("predicted_rate", pred.rate);
  out.put("time_scale", pred.time_scale);
  out.put("mean_events_per_replica", static_cast<double>(events) / static_cast<double>(std::max<std::size_t>(1, spec.replicas)));
  if (founders > 0) out.put("founder_in_arrival_set_fraction", static_cast<double>(founders_in_a) / static_cast<double>(founders));
  if (!out.samples.empty()) {
    out.mean = stats::mean(out.samples);
    out.ci = stats::mean_ci95(out.samples);
    out.put("mean_over_prediction", out.mean / out.predicted_mean);
    out.criteria.push_back(within("mean_within_factor", out.mean / out.predicted_mean, 1.0 / spec.mean_factor,
                                  spec.mean_factor));
  }
  if (out.ci.degenerate) out.notes.push_back("degenerate confidence interval (fewer than 2 samples)");
  if (out.samples.size() >= 20 && pred.rate > 0.0) {
    out.ks = stats::ks_exponential(out.samples, pred.rate);
    out.criteria.push_back(within("ks_exponential_p", out.ks->p_value, spec.ks_alpha, 1.0));
    // Shape only: exponential with the empirical mean (informational, the
    // p-value is conservative when the rate is estimated).
    const auto shape = stats::ks_exponential(out.samples, 1.0 / out.mean);
    out.put("ks_fitted_rate_p", shape.p_value);
  } else {
    out.notes.push_back("too few uncensored samples for a KS test");
  }
  if (out.censoring_flagged) out.notes.push_back("more than 5% of replicas censored");
  return out;
}

// ---------------------------------------------------------------------------
// Resident stability.

struct StabilitySpec {
  ModelSpec model;
  ScalingSpec scaling;
  std::size_t replicas = 100;
  std::uint64_t base_seed = 1;
  unsigned workers = default_workers();
  double periods = 10.0;
  double band = 0.1;     // relative to nbar^i_0
  double burn_in = 0.1;  // fraction of each phase ignored after a switch
  double sample_stride = 0.0;  // <= 0: lambda_K / 100
  double mutant_mass_epsilon = 0.1;
  double max_exceedance = 0.05;
};

inline SummaryStats resident_stability_experiment(const StabilitySpec& spec) {
  require_valid(spec.model, spec.scaling);
  const Dynamics dyn = make_dynamics(spec.model, spec.scaling);
  const PopulationState start = initial_state(spec.model, spec.scaling, dyn);
  const auto table = compute_fitness_table(spec.model);
  const double K = dyn.carrying_capacity;
  const double stride = spec.sample_stride > 0.0 ? spec.sample_stride : default_sample_stride(dyn);
  StopSpec stop;
  stop.mutant_mass_epsilon = spec.mutant_mass_epsilon;
  stop.max_time = spec.periods * dyn.clock.rescaled_period();

  auto one = [&](std::size_t i) {
    Rng rng = make_stream(spec.base_seed, i);
    Simulator sim(dyn, start);
    const auto res = sim.run(stop, rng, stride);
    double worst = 0.0;
    for (const auto& smp : res.observables.trajectory) {
      const auto pos = dyn.clock.phase_at(smp.time);
      const double len = dyn.clock.lambda_k() * spec.model.phases[pos.phase].duration;
      if (pos.offset < spec.burn_in * len) continue;
      const double nbar = table.equilibria[pos.phase][0];
      worst = std::max(worst, std::abs(static_cast<double>(smp.counts[0]) / K - nbar) / nbar);
    }
    return worst;
  };
  SummaryStats out;
  out.kind = "resident_stability";
  out.replicas = spec.replicas;
  out.samples = run_replicas<double>(spec.replicas, spec.workers, one);
  std::size_t exceed = 0;
  for (double w : out.samples) exceed += w > spec.band ? 1 : 0;
  const double frac = static_cast<double>(exceed) / static_cast<double>(std::max<std::size_t>(1, spec.replicas));
  out.mean = stats::mean(out.samples);
  out.put("exceedance_fraction", frac);
  out.put("max_relative_deviation", out.samples.empty() ? 0.0 : *std::max_element(out.samples.begin(), out.samples.end()));
  out.criteria.push_back(within("band_exceedance_fraction", frac, 0.0, spec.max_exceedance));
  return out;
}

// ---------------------------------------------------------------------------
// Mesoscopic equilibria.

struct MesoscopicSpec {
  ModelSpec model;
  ScalingSpec scaling;
  std::size_t replicas = 20;
  std::uint64_t base_seed = 1;
  unsigned workers = default_workers();
  double periods = 5.0;
  double burn_in = 0.3;              // fraction of each phase excluded
  double relative_tolerance = 0.25;  // trait 1
  double edge_factor = 2.0;          // traits 2..floor(alpha)
  double resident_band = 0.1;        // trait 0
};

struct MesoscopicAccumulator {
  std::vector<std::vector<double>> area;  // [phase][v] integral of N_v over interiors
  std::vector<double> time;               // [phase] interior time
};

inline SummaryStats mesoscopic_experiment(const MesoscopicSpec& spec) {
  require_valid(spec.model, spec.scaling);
  const auto table = mesoscopic_equilibria(spec.model, spec.scaling.alpha);
  const std::size_t depth = spec.scaling.mesoscopic_depth();
  const Dynamics dyn = make_dynamics(spec.model, spec.scaling);
  const PopulationState start = initial_state(spec.model, spec.scaling, dyn);
  const std::size_t ell = dyn.phases;
  const double K = dyn.carrying_capacity, mu = dyn.mutation_probability;
  StopSpec stop;
  stop.max_time = spec.periods * dyn.clock.rescaled_period();

  auto one = [&](std::size_t i) {
    Rng rng = make_stream(spec.base_seed, i);
    Simulator sim(dyn, start);
    MesoscopicAccumulator acc;
    acc.area.assign(ell, std::vector<double>(depth + 1, 0.0));
    acc.time.assign(ell, 0.0);
    double prev_t = start.time;
    std::size_t prev_phase = start.phase;
    long long prev_cycle = start.cycle;
    std::vector<long long> prev = start.counts;
    // Every step ends at an event, a boundary or the horizon, so
    // [prev_t, s.time) lies inside one phase.
    auto integrate = [&](const PopulationState& s) {
      const double len = dyn.clock.lambda_k() * spec.model.phases[prev_phase].duration;
      const double window = dyn.clock.phase_start(prev_cycle, prev_phase) + spec.burn_in * len;
      const double dt = s.time - std::max(prev_t, window);
      if (dt > 0.0) {
        acc.time[prev_phase] += dt;
        for (std::size_t v = 0; v <= depth; ++v) acc.area[prev_phase][v] += dt * static_cast<double>(prev[v]);
      }
      prev_t = s.time;
      prev_phase = s.phase;
      prev_cycle = s.cycle;
      prev = s.counts;
    };
    const auto res = sim.run(stop, rng, 0.0, [&](const PopulationState& s, const StepOutcome&) {
      integrate(s);
      return true;
    });
    integrate(res.final_state);
    return acc;
  };
  const auto reps = run_replicas<MesoscopicAccumulator>(spec.replicas, spec.workers, one);

  SummaryStats out;
  out.kind = "mesoscopic";
  out.replicas = spec.replicas;
  const double k_mu_depth = K * std::pow(mu, static_cast<double>(depth));
  out.put("K_mu_floor_alpha", k_mu_depth);
  if (k_mu_depth < 10.0 * (1.0 - 1e-9)) out.notes.push_back("K mu^floor(alpha) < 10: mesoscopic prediction is weak");
  for (std::size_t ph = 0; ph < ell; ++ph) {
    double t = 0.0;
    for (const auto& r : reps) t += r.time[ph];
    for (std::size_t v = 0; v <= depth; ++v) {
      double a = 0.0;
      for (const auto& r : reps) a += r.area[ph][v];
      const double avg = a / t / (K * std::pow(mu, static_cast<double>(v)));
      const double ratio = avg / table.at(ph, v);
      const std::string key = "phase" + std::to_string(ph) + "_trait" + std::to_string(v);
      out.put(key + "_average", avg);
      out.put(key + "_predicted", table.at(ph, v));
      if (v == 0)
        out.criteria.push_back(within(key + "_ratio", ratio, 1.0 - spec.resident_band, 1.0 + spec.resident_band));
      else if (v == 1)
        out.criteria.push_back(within(key + "_ratio", ratio, 1.0 - spec.relative_tolerance, 1.0 + spec.relative_tolerance));
      else
        out.criteria.push_back(within(key + "_ratio", ratio, 1.0 / spec.edge_factor, spec.edge_factor));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Law of large numbers against the Lotka-Volterra limit (mutation switched off).

struct OdeComparisonSpec {
  ModelSpec model;
  ScalingSpec scaling;
  std::vector<double> initial_density;  // empty: monomorphic resident equilibrium of phase 0
  double horizon = 10.0;
  std::size_t replicas = 100;
  std::uint64_t base_seed = 1;
  unsigned workers = default_workers();
  double epsilon = 0.05;
  double step = 1e-3;
  double sample_stride = 0.01;
  double max_exceedance = 0.05;
};

inline SummaryStats ode_comparison_experiment(const OdeComparisonSpec& spec) {
  require_valid(spec.model, spec.scaling);
  const Dynamics dyn = make_dynamics(spec.model, spec.scaling, 0.0);
  const double K = dyn.carrying_capacity;
  std::vector<double> n0 = spec.initial_density;
  if (n0.empty()) {
    n0.assign(spec.model.trait_count(), 0.0);
    n0[0] = equilibrium(spec.model, 0, 0);
  }
  std::vector<long long> counts;
  for (double x : n0) counts.push_back(static_cast<long long>(std::floor(x * K)));
  std::vector<double> start_density;
  for (long long c : counts) start_density.push_back(static_cast<double>(c) / K);
  const PopulationState start = make_state(dyn, counts);
  StopSpec stop;
  stop.max_time = spec.horizon;

  // Sampling grid as generated by the simulator.
  std::vector<double> grid;
  for (double t = 0.0; t <= spec.horizon; t += spec.sample_stride) grid.push_back(t);
  const auto deterministic = ode::sample_at(start_density, 0.0, grid, spec.model, spec.scaling.lambda_k, spec.step);

  auto one = [&](std::size_t i) {
    Rng rng = make_stream(spec.base_seed, i);
    Simulator sim(dyn, start);
    const auto res = sim.run(stop, rng, spec.sample_stride);
    double sup = 0.0;
    const auto& traj = res.observables.trajectory;
    for (std::size_t k = 0; k < std::min(traj.size(), grid.size()); ++k)
      for (std::size_t v = 0; v < traj[k].counts.size(); ++v)
        sup = std::max(sup, std::abs(static_cast<double>(traj[k].counts[v]) / K - deterministic[k][v]));
    return sup;
  };
  SummaryStats out;
  out.kind = "ode_comparison";
  out.replicas = spec.replicas;
  out.samples = run_replicas<double>(spec.replicas, spec.workers, one);
  std::size_t exceed = 0;
  for (double s : out.samples) exceed += s >= spec.epsilon ? 1 : 0;
  const double frac = static_cast<double>(exceed) / static_cast<double>(std::max<std::size_t>(1, spec.replicas));
  out.mean = stats::mean(out.samples);
  out.put("mean_sup_distance", out.mean);
  out.put("max_sup_distance", out.samples.empty() ? 0.0 : *std::max_element(out.samples.begin(), out.samples.end()));
  out.put("exceedance_fraction", frac);
  out.criteria.push_back(within("sup_distance_exceedance_fraction", frac, 0.0, spec.max_exceedance));
  return out;
}

// ---------------------------------------------------------------------------
// Transient growth of the pit-stop trait.

struct PitstopPeakSpec {
  ModelSpec model;
  ScalingSpec scaling;  // lambda_k is overridden by each entry of lambdas
  std::vector<double> lambdas{5.0, 10.0, 15.0};
  std::size_t replicas = 200;  // per lambda
  std::uint64_t base_seed = 1;
  unsigned workers = default_workers();
  double periods = 40.0;       // horizon per replica
  double stop_L_fraction = 0.05;  // end a replica once N_L >= this * K
  std::size_t min_episodes = 30;
  double slope_tolerance = 0.2;
};

struct PitstopEpisode {
  double lambda = 0.0;
  double arrival = 0.0;    // simulation time of the founding w-mutant
  double remaining = 0.0;  // fit time left at arrival, simulation units
  long long peak = 0;      // max N_w between arrival and the end of the fit phase
  bool survived = false;   // N_w > 0 at the end of the fit phase
};

inline SummaryStats pitstop_peak_experiment(const PitstopPeakSpec& spec) {
  SummaryStats out;
  out.kind = "pitstop_peak";
  std::vector<double> xs, ys;
  std::vector<std::vector<double>> residuals_by_lambda;
  double f1 = 0.0;
  for (std::size_t li = 0; li < spec.lambdas.size(); ++li) {
    ScalingSpec scaling = spec.scaling;
    scaling.lambda_k = spec.lambdas[li];
    require_valid(spec.model, scaling);
    const auto cls = classify_landscape(spec.model, scaling);
    if (!cls.pitstop()) throw std::domain_error("pitstop_peak_experiment: landscape is not a pit stop (" + cls.reason + ")");
    const std::size_t w = cls.pitstop_trait, L = spec.model.num_traits;
    f1 = invasion_fitness(spec.model, w, 0, 0);
    const Dynamics dyn = make_dynamics(spec.model, scaling);
    const PopulationState start = initial_state(spec.model, scaling, dyn);
    StopSpec stop;
    stop.max_time = spec.periods * dyn.clock.rescaled_period();
    const double l_cap = spec.stop_L_fraction * dyn.carrying_capacity;

    auto one = [&](std::size_t i) {
      Rng rng = make_stream(spec.base_seed + 7919 * (li + 1), i);
      Simulator sim(dyn, start);
      std::vector<PitstopEpisode> eps;
      bool active = false;
      PitstopEpisode cur;
      auto obs = [&](const PopulationState& s, const StepOutcome& o) {
        if (o.kind == StepOutcome::Kind::Boundary) {
          if (active && s.phase == 1) {
            cur.survived = s.counts[w] > 0;
            eps.push_back(cur);
            active = false;
          }
          return true;
        }
        if (o.trait == w) {
          if (!active && o.kind == StepOutcome::Kind::Mutation && s.counts[w] == 1 && s.phase == 0) {
            active = true;
            cur = {scaling.lambda_k, s.time, s.next_boundary - s.time, 1, false};
          } else if (active) {
            cur.peak = std::max(cur.peak, s.counts[w]);
            if (s.counts[w] == 0) {
              eps.push_back(cur);
              active = false;
            }
          }
        }
        return static_cast<double>(s.counts[L]) < l_cap;
      };
      sim.run(stop, rng, 0.0, obs);
      return eps;
    };
    const auto reps = run_replicas<std::vector<PitstopEpisode>>(spec.replicas, spec.workers, one);

    std::vector<double> res_here, logpeak_here;
    std::size_t arrivals = 0;
    const double min_remaining = std::sqrt(scaling.lambda_k);
    for (const auto& r : reps)
      for (const auto& e : r) {
        ++arrivals;
        if (!e.survived || e.remaining < min_remaining) continue;
        const double x = f1 * e.remaining;
        const double y = std::log(static_cast<double>(e.peak));
        xs.push_back(x);
        ys.push_back(y);
        res_here.push_back(y - x);
        logpeak_here.push_back(y);
      }
    const std::string key = "lambda" + std::to_string(static_cast<int>(std::lround(scaling.lambda_k)));
    out.put(key + "_fit_phase_arrivals", static_cast<double>(arrivals));
    out.put(key + "_qualifying_episodes", static_cast<double>(res_here.size()));
    out.put(key + "_median_residual", stats::median(res_here));
    out.put(key + "_median_log_peak", stats::median(logpeak_here));
    if (res_here.size() < spec.min_episodes)
      out.notes.push_back(key + ": insufficient conditioning events (" + std::to_string(res_here.size()) + ")");
    residuals_by_lambda.push_back(std::move(res_here));
    out.replicas += spec.replicas;
  }
  out.put("f1_w", f1);
  if (xs.size() >= 3) {
    const auto fit = stats::least_squares(xs, ys);
    out.put("pooled_slope", fit.slope);
    out.put("pooled_slope_se", fit.slope_se);
    out.put("pooled_intercept", fit.intercept);
    out.criteria.push_back(within("log_peak_slope", fit.slope, 1.0 - spec.slope_tolerance, 1.0 + spec.slope_tolerance));
  }
  for (const auto& r : residuals_by_lambda)
    if (r.size() < spec.min_episodes) out.criteria.push_back(within("enough_conditioning_events", static_cast<double>(r.size()),
                                                                    static_cast<double>(spec.min_episodes),
                                                                    std::numeric_limits<double>::infinity()));
  if (residuals_by_lambda.size() >= 2 && !residuals_by_lambda.front().empty() && !residuals_by_lambda.back().empty()) {
    const double drift = stats::median(residuals_by_lambda.back()) - stats::median(residuals_by_lambda.front());
    out.put("median_residual_drift", drift);
  }
  out.samples = ys;
  return out;
}

// ---------------------------------------------------------------------------
// Single-type oracles.

struct ExcursionSpec {
  double birth = 1.0;
  double death = 2.0;
  std::size_t runs = 100000;
  std::uint64_t base_seed = 1;
  long long max_k = 20;
  double tv_tolerance = 0.01;
  double mean_rel_tolerance = 0.02;
};

inline SummaryStats excursion_experiment(const ExcursionSpec& spec) {
  Rng rng = make_stream(spec.base_seed, 0);
  std::vector<double> hist(static_cast<std::size_t>(spec.max_k + 1), 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < spec.runs; ++r) {
    const auto e = bdp::simulate_excursion(spec.birth, spec.death, rng);
    total += static_cast<double>(e.births);
    if (e.births <= spec.max_k) hist[static_cast<std::size_t>(e.births)] += 1.0;
  }
  const double n = static_cast<double>(spec.runs);
  std::vector<double> pmf;
  for (long long k = 0; k <= spec.max_k; ++k) pmf.push_back(bdp::excursion_pmf(k, spec.birth, spec.death));
  for (double& h : hist) h /= n;
  SummaryStats out;
  out.kind = "excursion";
  out.replicas = spec.runs;
  const double tv = stats::total_variation(hist, pmf);
  out.mean = total / n;
  out.predicted_mean = bdp::excursion_mean(spec.birth, spec.death);
  out.put("tv_distance", tv);
  out.put("p_zero", hist[0]);
  out.put("p_zero_predicted", pmf[0]);
  out.criteria.push_back(within("tv_distance", tv, 0.0, spec.tv_tolerance));
  out.criteria.push_back(within("mean_relative_error", std::abs(out.mean / out.predicted_mean - 1.0), 0.0,
                                spec.mean_rel_tolerance));
  return out;
}

struct ExtinctionSpec {
  double birth = 1.0;  // B
  double death = 2.0;  // D
  std::vector<double> times{0.5, 1.0, 2.0, 5.0};
  std::size_t runs = 100000;
  std::uint64_t base_seed = 1;
  double z_max = 3.0;
};

// Empirical P(extinct by t) from simulated excursion lifetimes.
inline SummaryStats extinction_experiment(const ExtinctionSpec& spec) {
  Rng rng = make_stream(spec.base_seed, 0);
  std::vector<double> life;
  life.reserve(spec.runs);
  for (std::size_t r = 0; r < spec.runs; ++r)
    life.push_back(bdp::simulate_excursion(spec.birth, spec.death, rng, true).lifetime);
  SummaryStats out;
  out.kind = "extinction_cdf";
  out.replicas = spec.runs;
  const double n = static_cast<double>(spec.runs);
  for (double t : spec.times) {
    const double hits = static_cast<double>(std::count_if(life.begin(), life.end(), [&](double x) { return x <= t; }));
    const double p_hat = hits / n;
    const double p = bdp::extinction_cdf(t, spec.birth, spec.death);
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-300) / n);
    const std::string key = "t" + std::to_string(t);
    out.put(key + "_empirical", p_hat);
    out.put(key + "_closed_form", p);
    out.criteria.push_back(within(key + "_z", (p_hat - p) / se, -spec.z_max, spec.z_max));
  }
  return out;
}

struct SurvivalSpec {
  double birth = 2.0;
  double death = 1.0;
  std::size_t runs = 100000;
  std::uint64_t base_seed = 1;
  long long cap = 200;
  double tolerance = 0.01;
};

inline SummaryStats survival_experiment(const SurvivalSpec& spec) {
  Rng rng = make_stream(spec.base_seed, 0);
  std::size_t alive = 0;
  for (std::size_t r = 0; r < spec.runs; ++r) alive += bdp::simulate_survival(spec.birth, spec.death, spec.cap, rng) ? 1 : 0;
  SummaryStats out;
  out.kind = "survival";
  out.replicas = spec.runs;
  out.mean = static_cast<double>(alive) / static_cast<double>(spec.runs);
  out.predicted_mean = bdp::survival_probability(spec.birth, spec.death);
  out.criteria.push_back(within("survival_abs_error", std::abs(out.mean - out.predicted_mean), 0.0, spec.tolerance));
  return out;
}

struct WSpec {
  double birth = 2.0;
  double death = 1.0;
  std::size_t samples = 100000;
  std::uint64_t base_seed = 1;
  double mean_tolerance = 0.02;
  double atom_tolerance = 0.01;
};

inline SummaryStats w_law_experiment(const WSpec& spec) {
  Rng rng = make_stream(spec.base_seed, 0);
  std::vector<double> w(spec.samples);
  for (auto& x : w) x = bdp::sample_W(spec.birth, spec.death, rng);
  const double q = (spec.birth - spec.death) / spec.birth;
  const double zeros = static_cast<double>(std::count(w.begin(), w.end(), 0.0));
  const double n = static_cast<double>(spec.samples);
  std::vector<double> positive;
  for (double x : w)
    if (x > 0.0) positive.push_back(x);
  SummaryStats out;
  out.kind = "w_law";
  out.replicas = spec.samples;
  out.mean = stats::mean(w);
  out.predicted_mean = 1.0;
  out.put("atom_at_zero", zeros / n);
  out.put("atom_at_zero_predicted", 1.0 - q);
  out.put("conditional_mean", stats::mean(positive));
  out.put("conditional_mean_predicted", 1.0 / q);
  out.criteria.push_back(within("mean_abs_error", std::abs(out.mean - 1.0), 0.0, spec.mean_tolerance));
  out.criteria.push_back(within("atom_abs_error", std::abs(zeros / n - (1.0 - q)), 0.0, spec.atom_tolerance));
  return out;
}

// Engine check across one rate switch: a single-type linear process with
// (b1, d1) on [0, lambda T1) and (b2, d2) afterwards, compared with the
// composition of the two constant-rate generating functions.
struct BoundarySpec {
  double b1 = 1.0, d1 = 2.0;
  double b2 = 0.5, d2 = 1.5;
  double switch_time = 1.0;
  double second_phase = 20.0;
  std::vector<double> times{0.5, 1.0, 1.5, 2.5, 4.0};
  std::size_t runs = 100000;
  std::uint64_t base_seed = 1;
  double z_max = 3.0;
};

// P(Z(t) = 0) for a linear process started from one individual where rates
// switch at time tau, via the fractional-linear generating function.
inline double two_segment_extinction(double t, const BoundarySpec& s) {
  if (t <= s.switch_time) return bdp::extinction_cdf(t, s.b1, s.d1);
  const double r = s.b1 - s.d1, e = std::exp(r * s.switch_time);
  const double p0 = s.d1 * (e - 1.0) / (s.b1 * e - s.d1);
  const double q = s.b1 * (e - 1.0) / (s.b1 * e - s.d1);  // P(Z = k) = (1 - p0)(1 - q) q^{k-1}
  const double x = bdp::extinction_cdf(t - s.switch_time, s.b2, s.d2);
  return p0 + (1.0 - p0) * (1.0 - q) * x / (1.0 - q * x);
}

inline ModelSpec boundary_model(const BoundarySpec& s) {
  ModelSpec m;
  m.num_traits = 1;
  // competition zero: the engine is exercised as a pure linear process
  m.phases = {PhaseSpec{s.switch_time, {s.b1, 0.0}, {s.d1, 1.0}, {{0.0, 0.0}, {0.0, 1.0}}},
              PhaseSpec{s.second_phase, {s.b2, 0.0}, {s.d2, 1.0}, {{0.0, 0.0}, {0.0, 1.0}}}};
  return m;
}

inline SummaryStats boundary_extinction_experiment(const BoundarySpec& spec) {
  const ModelSpec model = boundary_model(spec);
  ScalingSpec scaling{1, 1.5, 1.0};
  const Dynamics dyn = make_dynamics(model, scaling, 0.0);
  const PopulationState start = make_state(dyn, {1, 0});
  Rng rng = make_stream(spec.base_seed, 0);
  StopSpec stop;
  stop.max_time = *std::max_element(spec.times.begin(), spec.times.end());
  std::vector<double> death_time;
  death_time.reserve(spec.runs);
  for (std::size_t r = 0; r < spec.runs; ++r) {
    Simulator sim(dyn, start);
    const auto res = sim.run(stop, rng, 0.0);
    death_time.push_back(res.reason == StopReason::Extinction ? res.final_state.time
                                                              : std::numeric_limits<double>::infinity());
  }
  SummaryStats out;
  out.kind = "boundary_extinction";
  out.replicas = spec.runs;
  const double n = static_cast<double>(spec.runs);
  for (double t : spec.times) {
    const double p_hat = static_cast<double>(std::count_if(death_time.begin(), death_time.end(),
                                                           [&](double x) { return x <= t; })) / n;
    const double p = two_segment_extinction(t, spec);
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-300) / n);
    const std::string key = "t" + std::to_string(t);
    out.put(key + "_empirical", p_hat);
    out.put(key + "_composed", p);
    out.criteria.push_back(within(key + "_z", (p_hat - p) / se, -spec.z_max, spec.z_max));
  }
  return out;
}

}  // namespace valley::harness

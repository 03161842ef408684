#pragma once

// Deterministic Lotka-Volterra limit of N^K / K (mutation-free), integrated
// with classical fixed-step RK4. Steps never straddle a phase boundary.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "valley/model.hpp"

namespace valley::ode {

struct DensityState {
  std::vector<double> densities;
  double time = 0.0;
};

// dn_v/dt = (b_v - d_v - sum_w c_{v,w} n_w) n_v in the given phase.
inline std::vector<double> lv_derivative(const std::vector<double>& n, const PhaseSpec& phase) {
  const std::size_t m = n.size();
  std::vector<double> dn(m);
  for (std::size_t v = 0; v < m; ++v) {
    double load = 0.0;
    for (std::size_t w = 0; w < m; ++w) load += phase.competition[v][w] * n[w];
    dn[v] = (phase.birth[v] - phase.death[v] - load) * n[v];
  }
  return dn;
}

namespace detail {

inline void rk4_step(std::vector<double>& n, double h, const PhaseSpec& phase) {
  const std::size_t m = n.size();
  std::vector<double> tmp(m);
  const auto k1 = lv_derivative(n, phase);
  for (std::size_t v = 0; v < m; ++v) tmp[v] = n[v] + 0.5 * h * k1[v];
  const auto k2 = lv_derivative(tmp, phase);
  for (std::size_t v = 0; v < m; ++v) tmp[v] = n[v] + 0.5 * h * k2[v];
  const auto k3 = lv_derivative(tmp, phase);
  for (std::size_t v = 0; v < m; ++v) tmp[v] = n[v] + h * k3[v];
  const auto k4 = lv_derivative(tmp, phase);
  for (std::size_t v = 0; v < m; ++v) {
    n[v] += h / 6.0 * (k1[v] + 2.0 * k2[v] + 2.0 * k3[v] + k4[v]);
    if (n[v] < 0.0) n[v] = 0.0;
    if (!(n[v] < 1e12)) throw std::runtime_error("ode: density blow-up");
  }
}

}  // namespace detail

// Advances `state` to time t1 on the simulation clock (phase i lasts
// lambda_K T_i). Every segment between boundaries is cut into equal steps
// no longer than `step`.
inline void advance(DensityState& state, double t1, const ModelSpec& model, double lambda_k, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("ode: step must be positive");
  if (t1 < state.time) throw std::invalid_argument("ode: t1 before current time");
  const PhaseClock clock(model.durations(), lambda_k);
  const auto pos = clock.phase_at(state.time);
  std::size_t phase = pos.phase;
  long long cycle = pos.cycle;
  while (state.time < t1) {
    const double phase_end = clock.phase_start(cycle, phase + 1);
    if (phase_end > state.time) {
      const double seg_end = std::min(t1, phase_end);
      const double span = seg_end - state.time;
      const auto steps = std::max(1LL, static_cast<long long>(std::ceil(span / step - 1e-9)));
      const double h = span / static_cast<double>(steps);
      for (long long k = 0; k < steps; ++k) detail::rk4_step(state.densities, h, model.phases[phase]);
      state.time = seg_end;
      if (seg_end < phase_end) break;
    }
    if (++phase == clock.phase_count()) {
      phase = 0;
      ++cycle;
    }
  }
}

// Trajectory at t0, t0 + output_stride, ..., t1 (t1 always included).
inline std::vector<DensityState> integrate(const std::vector<double>& n0, double t0, double t1,
                                           const ModelSpec& model, double lambda_k, double step,
                                           double output_stride = 0.0) {
  if (t1 < t0) throw std::invalid_argument("ode: t0 must not exceed t1");
  if (n0.size() != model.trait_count()) throw std::invalid_argument("ode: need L+1 densities");
  if (!(output_stride > 0.0)) output_stride = step;
  std::vector<DensityState> out;
  DensityState s{n0, t0};
  out.push_back(s);
  for (long long k = 1;; ++k) {
    const double target = std::min(t1, t0 + static_cast<double>(k) * output_stride);
    advance(s, target, model, lambda_k, step);
    out.push_back(s);
    if (target >= t1) break;
  }
  return out;
}

// Densities at each requested (non-decreasing) time.
inline std::vector<std::vector<double>> sample_at(const std::vector<double>& n0, double t0,
                                                  const std::vector<double>& times, const ModelSpec& model,
                                                  double lambda_k, double step) {
  std::vector<std::vector<double>> out;
  out.reserve(times.size());
  DensityState s{n0, t0};
  for (double t : times) {
    advance(s, t, model, lambda_k, step);
    out.push_back(s.densities);
  }
  return out;
}

}  // namespace valley::ode

#pragma once

// Reference landscapes shared by the unit tests and the acceptance binary.
// The sample configs under configs/ carry the same numbers.

#include <vector>

#include "valley/model.hpp"

namespace fixtures {

using valley::Matrix;
using valley::ModelSpec;
using valley::PhaseSpec;
using valley::ScalingSpec;

inline Matrix ones(std::size_t n) { return Matrix(n, std::vector<double>(n, 1.0)); }

// L=2, alpha=1.5: f_{1,0}=-2 in both phases, f_{2,0}=(1,-0.5), nbar_0=1.
// R=(0.5,0), A=[0,0.5), R_eff=0.125.
inline ModelSpec strict_valley() {
  ModelSpec m;
  m.num_traits = 2;
  m.phases = {PhaseSpec{1.0, {2.0, 1.0, 2.0}, {1.0, 2.0, 0.0}, ones(3)},
              PhaseSpec{1.0, {2.0, 1.0, 2.0}, {1.0, 2.0, 1.5}, ones(3)}};
  return m;
}
inline ScalingSpec strict_valley_scaling() { return {10000, 1.5, 5.0}; }

// Same shape with a fast L sweep for the crossing experiment: f_L = (3, -0.5),
// b_1 = 0.25. R = (0.1875, 0), A = [0, 5/6), R_eff = 0.078125.
inline ModelSpec crossing_valley() {
  ModelSpec m;
  m.num_traits = 2;
  m.phases = {PhaseSpec{1.0, {2.0, 0.25, 4.0}, {1.0, 1.25, 0.0}, ones(3)},
              PhaseSpec{1.0, {2.0, 0.25, 4.0}, {1.0, 1.25, 3.5}, ones(3)}};
  return m;
}
inline ScalingSpec crossing_valley_scaling() { return {10000, 1.5, 5.0}; }

// L=3, alpha=1.5, pit stop at w=2 with f^1_w=0.5, f^2_w=-1; L fit in both
// phases. Trait 2 and L interact weakly with everything but the resident.
inline ModelSpec pitstop() {
  ModelSpec m;
  m.num_traits = 3;
  const Matrix c = {{1.0, 1.0, 0.01, 1.0}, {1.0, 1.0, 1.0, 1.0}, {1.0, 0.01, 0.01, 0.01}, {1.0, 1.0, 1.0, 1.0}};
  m.phases = {PhaseSpec{1.0, {2.0, 0.2, 1.5, 2.0}, {1.0, 0.7, 0.0, 0.0}, c},
              PhaseSpec{1.0, {2.0, 0.2, 1.0, 2.0}, {1.0, 0.7, 1.0, 0.0}, c}};
  return m;
}
inline ScalingSpec pitstop_scaling(double lambda_k = 5.0) { return {1000, 1.5, lambda_k}; }

// L=3, alpha=2.5: traits 1 and 2 mesoscopic and unfit, L unfit.
// a^1 = (1, 1.5, 1.5), a^2 = (1, 0.75, 0.5).
inline ModelSpec mesoscopic() {
  ModelSpec m;
  m.num_traits = 3;
  m.phases = {PhaseSpec{1.0, {1.5, 1.0, 1.0, 0.5}, {0.5, 1.0, 1.0, 1.0}, ones(4)},
              PhaseSpec{1.0, {1.5, 1.0, 1.0, 0.5}, {0.5, 2.0, 1.5, 1.0}, ones(4)}};
  return m;
}
inline ScalingSpec mesoscopic_scaling() { return {100000, 2.5, 10.0}; }

// Equal resident equilibria (nbar_0 = 1) reached with different turnover.
inline ModelSpec resident_switch() {
  ModelSpec m;
  m.num_traits = 1;
  m.phases = {PhaseSpec{1.0, {2.0, 0.5}, {1.0, 1.0}, ones(2)},
              PhaseSpec{1.0, {1.2, 0.5}, {0.2, 1.0}, ones(2)}};
  return m;
}
inline ScalingSpec resident_switch_scaling() { return {10000, 1.5, 20.0}; }

// Logistic resident whose equilibrium jumps between 1 and 0.5.
inline ModelSpec logistic_switch() {
  ModelSpec m;
  m.num_traits = 1;
  m.phases = {PhaseSpec{1.0, {2.0, 0.0}, {1.0, 1.0}, ones(2)},
              PhaseSpec{1.0, {1.0, 0.0}, {0.5, 1.0}, ones(2)}};
  return m;
}
inline ScalingSpec logistic_switch_scaling() { return {10000, 1.5, 2.0}; }

}  // namespace fixtures

#pragma once

// Parameter schema for multi-type logistic birth-death processes with
// forward mutation in a periodically switching environment.
//
// Traits are labelled 0..L, phases 0..ell-1 (phase 0 is the first phase of
// every period). Phase durations are given in unrescaled units; on the
// simulation clock phase i lasts lambda_K * T_i.

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace valley {

using Matrix = std::vector<std::vector<double>>;

struct PhaseSpec {
  double duration = 1.0;     // T_i
  std::vector<double> birth;  // b^i_v
  std::vector<double> death;  // d^i_v
  Matrix competition;         // c^i_{v,w}: effect of w on v
};

// Forward nearest-neighbour kernel: v -> v+1, L -> L.
inline Matrix default_kernel(std::size_t num_traits) {
  const std::size_t n = num_traits + 1;
  Matrix m(n, std::vector<double>(n, 0.0));
  for (std::size_t v = 0; v + 1 < n; ++v) m[v][v + 1] = 1.0;
  m[n - 1][n - 1] = 1.0;
  return m;
}

struct ModelSpec {
  std::size_t num_traits = 1;  // L
  std::vector<PhaseSpec> phases;
  Matrix kernel;  // empty means default_kernel(num_traits)

  std::size_t trait_count() const { return num_traits + 1; }
  std::size_t phase_count() const { return phases.size(); }

  Matrix mutation_kernel() const {
    return kernel.empty() ? default_kernel(num_traits) : kernel;
  }

  bool has_default_kernel() const {
    if (kernel.empty()) return true;
    return kernel == default_kernel(num_traits);
  }

  std::vector<double> durations() const {
    std::vector<double> t;
    t.reserve(phases.size());
    for (const auto& p : phases) t.push_back(p.duration);
    return t;
  }
};

struct ScalingSpec {
  long long carrying_capacity = 1000;  // K
  double alpha = 1.5;
  double lambda_k = 1.0;

  // mu_K = K^{-1/alpha}; never supplied directly.
  double mutation_probability() const {
    return std::pow(static_cast<double>(carrying_capacity), -1.0 / alpha);
  }
  // floor(alpha): number of mesoscopic traits above the resident.
  std::size_t mesoscopic_depth() const {
    return static_cast<std::size_t>(std::floor(alpha));
  }
};

struct Violation {
  std::string field;
  std::string rule;

  std::string str() const { return field.empty() ? rule : field + ": " + rule; }
};

inline std::vector<Violation> validate_model(const ModelSpec& model,
                                             const ScalingSpec& scaling) {
  std::vector<Violation> out;
  const std::size_t n = model.trait_count();
  auto add = [&](std::string field, std::string rule) {
    out.push_back({std::move(field), std::move(rule)});
  };

  if (model.num_traits < 1) add("L", "L must be at least 1");
  if (model.phases.empty()) add("phases", "at least one phase required");

  for (std::size_t i = 0; i < model.phases.size(); ++i) {
    const auto& p = model.phases[i];
    const std::string pre = "phases[" + std::to_string(i) + "]";
    if (!(p.duration > 0.0) || !std::isfinite(p.duration))
      add(pre + ".T", "duration must be positive");
    if (p.birth.size() != n) add(pre + ".b", "birth must have L+1 entries");
    if (p.death.size() != n) add(pre + ".d", "death must have L+1 entries");
    for (double b : p.birth)
      if (!(b >= 0.0) || !std::isfinite(b)) {
        add(pre + ".b", "birth rates must be non-negative");
        break;
      }
    for (double d : p.death)
      if (!(d >= 0.0) || !std::isfinite(d)) {
        add(pre + ".d", "death rates must be non-negative");
        break;
      }
    bool shape_ok = p.competition.size() == n;
    for (const auto& row : p.competition) shape_ok = shape_ok && row.size() == n;
    if (!shape_ok) {
      add(pre + ".c", "competition must be (L+1)x(L+1)");
      continue;
    }
    bool neg = false;
    for (const auto& row : p.competition)
      for (double c : row) neg = neg || !(c >= 0.0) || !std::isfinite(c);
    if (neg) add(pre + ".c", "competition entries must be non-negative");
    for (std::size_t v = 0; v < n; ++v)
      if (!(p.competition[v][v] > 0.0)) {
        add(pre + ".c", "competition diagonal must be positive");
        break;
      }
  }

  if (!model.kernel.empty()) {
    bool shape_ok = model.kernel.size() == n;
    for (const auto& row : model.kernel) shape_ok = shape_ok && row.size() == n;
    if (!shape_ok) {
      add("kernel", "kernel must be (L+1)x(L+1)");
    } else {
      for (std::size_t v = 0; v < n; ++v) {
        double s = 0.0;
        bool neg = false;
        for (double m : model.kernel[v]) {
          s += m;
          neg = neg || m < 0.0;
        }
        if (neg || std::abs(s - 1.0) > 1e-12) {
          add("kernel[" + std::to_string(v) + "]", "kernel rows must be probability vectors");
          break;
        }
      }
    }
  }

  if (scaling.carrying_capacity < 1) add("K", "K must be at least 1");
  if (!(scaling.alpha > 0.0) || !std::isfinite(scaling.alpha))
    add("alpha", "alpha must be positive");
  else if (scaling.alpha == std::floor(scaling.alpha))
    add("alpha", "alpha must be non-integer");
  if (!(scaling.lambda_k > 0.0) || !std::isfinite(scaling.lambda_k))
    add("lambda_K", "lambda_K must be positive");
  return out;
}

// Soft checks: conditions that are asymptotic requirements, not hard errors.
inline std::vector<std::string> model_warnings(const ScalingSpec& scaling) {
  std::vector<std::string> w;
  const double log_k = std::log(static_cast<double>(scaling.carrying_capacity));
  if (scaling.lambda_k >= log_k) {
    std::ostringstream os;
    os << "lambda_K=" << scaling.lambda_k << " is not below ln K=" << log_k;
    w.push_back(os.str());
  }
  if (scaling.lambda_k <= 1.0) w.push_back("lambda_K should be well above 1");
  return w;
}

struct PhasePosition {
  std::size_t phase;   // 0-based
  double offset;       // simulation time elapsed since the phase started
  long long cycle;     // completed periods before t
};

// Cumulative phase boundaries on the unrescaled clock.
class PhaseClock {
 public:
  PhaseClock() = default;
  PhaseClock(const std::vector<double>& durations, double lambda_k)
      : lambda_k_(lambda_k) {
    if (durations.empty()) throw std::invalid_argument("PhaseClock: no phases");
    if (!(lambda_k > 0.0)) throw std::invalid_argument("PhaseClock: lambda_K must be positive");
    boundaries_.assign(1, 0.0);
    double acc = 0.0;
    for (double t : durations) {
      if (!(t > 0.0)) throw std::invalid_argument("PhaseClock: durations must be positive");
      acc += t;
      boundaries_.push_back(acc);
    }
  }
  PhaseClock(const ModelSpec& model, const ScalingSpec& scaling)
      : PhaseClock(model.durations(), scaling.lambda_k) {}

  std::size_t phase_count() const { return boundaries_.size() - 1; }
  double period() const { return boundaries_.back(); }
  double lambda_k() const { return lambda_k_; }
  // T^Sigma_j, j = 0..ell
  double boundary(std::size_t j) const { return boundaries_[j]; }
  const std::vector<double>& boundaries() const { return boundaries_; }
  double rescaled_period() const { return lambda_k_ * period(); }

  // Simulation time at which phase `phase` of period `cycle` starts.
  double phase_start(long long cycle, std::size_t phase) const {
    return lambda_k_ * (static_cast<double>(cycle) * period() + boundaries_[phase]);
  }

  PhasePosition phase_at(double t) const {
    if (t < 0.0) throw std::invalid_argument("phase_at: negative time");
    const double u = t / lambda_k_;
    long long cycle = static_cast<long long>(std::floor(u / period()));
    double r = u - static_cast<double>(cycle) * period();
    if (r >= period()) {
      r -= period();
      ++cycle;
    }
    if (r < 0.0) r = 0.0;
    std::size_t i = 0;
    while (i + 1 < phase_count() && r >= boundaries_[i + 1]) ++i;
    return {i, t - phase_start(cycle, i), cycle};
  }

 private:
  std::vector<double> boundaries_{0.0, 1.0};
  double lambda_k_ = 1.0;
};

inline PhasePosition phase_at(const PhaseClock& clock, double t) { return clock.phase_at(t); }

}  // namespace valley

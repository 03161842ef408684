#pragma once

// JSON configs, JSON reports and CSV dumps.
//
// Config document:
//   {"L": 2, "phases": [{"T": 1, "b": [...], "d": [...], "c": [[...]]}, ...],
//    "kernel": [[...]] (optional), "K": 10000, "alpha": 1.5, "lambda_K": 5,
//    "stop": {...} (optional), "experiment": {...} (optional)}

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "valley/engine.hpp"
#include "valley/fitness.hpp"
#include "valley/harness.hpp"
#include "valley/landscape.hpp"
#include "valley/model.hpp"
#include "valley/ode.hpp"
#include "valley/theory.hpp"

namespace valley::io {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Config {
  ModelSpec model;
  ScalingSpec scaling;
  StopSpec stop{0.1, 0.0, std::numeric_limits<double>::infinity(), 2'000'000'000ULL};
  json experiment = json::object();
  std::string hash;  // fnv1a-64 of the config bytes, hex
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

namespace detail {

template <class T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, key) : fallback;
}

}  // namespace detail

inline Config parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  Config cfg;
  const long long L = detail::get<long long>(j, "L");
  if (L < 1) throw ConfigError("L must be at least 1");
  cfg.model.num_traits = static_cast<std::size_t>(L);
  const json& phases = j.contains("phases") ? j.at("phases") : json();
  if (!phases.is_array() || phases.empty()) throw ConfigError("'phases' must be a non-empty array");
  for (const auto& p : phases) {
    if (!p.is_object()) throw ConfigError("each phase must be an object");
    PhaseSpec ph;
    ph.duration = detail::get<double>(p, "T");
    ph.birth = detail::get<std::vector<double>>(p, "b");
    ph.death = detail::get<std::vector<double>>(p, "d");
    ph.competition = detail::get<Matrix>(p, "c");
    cfg.model.phases.push_back(std::move(ph));
  }
  if (j.contains("kernel") && !j.at("kernel").is_null()) cfg.model.kernel = detail::get<Matrix>(j, "kernel");
  const double K = detail::get<double>(j, "K");
  if (!(K >= 1.0) || K != std::floor(K) || K > 9e15) throw ConfigError("K must be a positive integer");
  cfg.scaling.carrying_capacity = static_cast<long long>(K);
  cfg.scaling.alpha = detail::get<double>(j, "alpha");
  cfg.scaling.lambda_k = detail::get<double>(j, "lambda_K");
  if (j.contains("stop")) {
    const json& s = j.at("stop");
    if (!s.is_object()) throw ConfigError("'stop' must be an object");
    cfg.stop.invasion_epsilon = detail::get_or(s, "invasion_epsilon", cfg.stop.invasion_epsilon);
    cfg.stop.mutant_mass_epsilon = detail::get_or(s, "mutant_mass_epsilon", cfg.stop.mutant_mass_epsilon);
    cfg.stop.max_time = detail::get_or(s, "max_time", cfg.stop.max_time);
    cfg.stop.max_events = detail::get_or<std::uint64_t>(s, "max_events", cfg.stop.max_events);
  }
  if (j.contains("experiment")) {
    cfg.experiment = j.at("experiment");
    if (!cfg.experiment.is_object()) throw ConfigError("'experiment' must be an object");
  }
  return cfg;
}

inline Config parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  Config cfg = parse_config(j);
  cfg.hash = hex64(fnv1a(text));
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline json to_json(const ModelSpec& m, const ScalingSpec& s) {
  json j;
  j["L"] = m.num_traits;
  j["phases"] = json::array();
  for (const auto& p : m.phases) j["phases"].push_back({{"T", p.duration}, {"b", p.birth}, {"d", p.death}, {"c", p.competition}});
  if (!m.kernel.empty()) j["kernel"] = m.kernel;
  j["K"] = s.carrying_capacity;
  j["alpha"] = s.alpha;
  j["lambda_K"] = s.lambda_k;
  return j;
}

// ---------------------------------------------------------------------------
// Reports.

template <class T>
json optional_json(const std::optional<T>& x) {
  return x ? json(*x) : json(nullptr);
}

// Non-finite doubles become null.
inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const FitnessTable& t) {
  json j;
  j["equilibria"] = t.equilibria;
  json f = json::array();
  for (const auto& phase : t.fitness) {
    json rows = json::array();
    for (const auto& row : phase) {
      json r = json::array();
      for (const auto& x : row) r.push_back(optional_json(x));
      rows.push_back(r);
    }
    f.push_back(rows);
  }
  j["fitness"] = f;
  json avg = json::array();
  for (const auto& a : t.average) avg.push_back(optional_json(a));
  j["average"] = avg;
  j["durations"] = t.durations;
  return j;
}

inline json to_json(const ArrivalSet& a) {
  json iv = json::array();
  for (const auto& i : a.intervals) iv.push_back({i.lo, i.hi});
  return {{"intervals", iv}, {"period", a.period}, {"measure", a.total_measure}};
}

inline json nan_matrix(const std::vector<std::vector<double>>& m) {
  json out = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (double x : row) r.push_back(num(x));
    out.push_back(r);
  }
  return out;
}

inline json to_json(const RateReport& r) {
  json j;
  j["regime"] = "strict_valley";
  j["fitness_table"] = to_json(r.table);
  j["rho"] = nan_matrix(r.rho);
  j["lambda_rho"] = nan_matrix(r.lam);
  json phases = json::array();
  for (const auto& p : r.phases)
    phases.push_back({{"resident", p.resident},
                      {"mesoscopic_chain", p.mesoscopic_chain},
                      {"feeding_birth", p.feeding_birth},
                      {"valley_chain", p.valley_chain},
                      {"survival", p.survival},
                      {"R", p.rate}});
  j["phases"] = phases;
  j["R_phase"] = r.phase_rates;
  j["arrival_set"] = to_json(r.arrival_set);
  j["R_eff"] = r.effective_rate;
  j["mu_K"] = r.mutation_probability;
  j["timescale"] = num(r.timescale);
  return j;
}

inline json to_json(const PitstopReport& r) {
  json j;
  j["regime"] = "pitstop";
  j["fitness_table"] = to_json(r.table);
  j["w"] = r.w;
  j["Lambda"] = {r.Lambda[0], r.Lambda[1]};
  j["prefix"] = r.prefix;
  j["fit_term"] = r.fit_term;
  j["unfit_term"] = r.unfit_term;
  j["R_pitstop"] = r.rate;
  j["peak_exponent"] = r.peak_exponent;
  j["h_zero"] = r.h_zero;
  j["mu_K"] = r.mutation_probability;
  j["timescale"] = num(r.timescale);
  return j;
}

inline json to_json(const Classification& c) {
  json j{{"regime", to_string(c.regime)}, {"reason", c.reason}};
  if (c.pitstop()) j["pitstop_trait"] = c.pitstop_trait;
  return j;
}

inline json to_json(const harness::SummaryStats& s) {
  json j;
  j["kind"] = s.kind;
  j["replicas"] = s.replicas;
  j["censored"] = s.censored;
  j["censoring_flagged"] = s.censoring_flagged;
  j["mean"] = num(s.mean);
  j["ci95"] = {{"lo", num(s.ci.lo)}, {"hi", num(s.ci.hi)}, {"degenerate", s.ci.degenerate}};
  j["predicted_mean"] = num(s.predicted_mean);
  if (s.ks) j["ks"] = {{"statistic", s.ks->statistic}, {"p_value", s.ks->p_value}, {"n", s.ks->n}};
  json m = json::object();
  for (const auto& [k, v] : s.metrics) m[k] = num(v);
  j["metrics"] = m;
  j["notes"] = s.notes;
  json c = json::array();
  for (const auto& x : s.criteria)
    c.push_back({{"name", x.name}, {"value", num(x.value)}, {"lo", num(x.lo)}, {"hi", num(x.hi)},
                 {"pass", x.pass}, {"informational", x.informational}});
  j["criteria"] = c;
  j["passed"] = s.passed();
  json samples = json::array();
  for (double x : s.samples) samples.push_back(num(x));
  j["samples"] = samples;
  return j;
}

// ---------------------------------------------------------------------------
// CSV.

inline void provenance_line(std::ostream& os, const std::string& hash, std::uint64_t seed) {
  os << "# config_hash=" << hash << " seed=" << seed << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& traj, std::size_t traits) {
  os << 't';
  for (std::size_t v = 0; v < traits; ++v) os << ",N_" << v;
  os << ",phase\n";
  os << std::setprecision(17);
  for (const auto& s : traj) {
    os << s.time;
    for (long long c : s.counts) os << ',' << c;
    os << ',' << s.phase << '\n';
  }
}

inline void write_density_csv(std::ostream& os, const std::vector<ode::DensityState>& traj, const ModelSpec& model,
                              double lambda_k) {
  const std::size_t n = model.trait_count();
  const PhaseClock clock(model.durations(), lambda_k);
  os << 't';
  for (std::size_t v = 0; v < n; ++v) os << ",N_" << v;
  os << ",phase\n";
  os << std::setprecision(17);
  for (const auto& s : traj) {
    os << s.time;
    for (double x : s.densities) os << ',' << x;
    os << ',' << clock.phase_at(s.time).phase << '\n';
  }
}

inline void write_arrivals_csv(std::ostream& os, const std::vector<double>& first_arrival) {
  os << "trait,first_arrival_time\n" << std::setprecision(17);
  for (std::size_t v = 0; v < first_arrival.size(); ++v) {
    os << v << ',';
    if (!std::isnan(first_arrival[v])) os << first_arrival[v];
    os << '\n';
  }
}

inline void write_samples_csv(std::ostream& os, const harness::SummaryStats& s) {
  os << "replica,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < s.samples.size(); ++i) os << i << ',' << s.samples[i] << '\n';
}

}  // namespace valley::io

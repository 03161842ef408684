// valley: theory reports, single runs and replicated experiments from a JSON config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "valley/valley.hpp"

namespace fs = std::filesystem;
using namespace valley;
using io::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  unsigned workers = harness::default_workers();
  std::string out;
  std::string format = "json";
  std::string kind;
};

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed=" << s << '\n';
  return s;
}

io::Config require_config(const Options& o) {
  if (o.config.empty()) throw io::ConfigError("--config is required");
  return io::load_config(o.config);
}

// Writes `body` to <out>/<name>, or to stdout when no --out was given.
void emit(const Options& o, const std::string& name, const std::string& body) {
  if (o.out.empty()) {
    std::cout << body;
    return;
  }
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / name, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + (fs::path(o.out) / name).string());
  f << body;
}

json provenance(const io::Config& cfg, std::optional<std::uint64_t> seed) {
  json p{{"config_hash", cfg.hash}};
  if (seed) p["seed"] = *seed;
  return p;
}

int cmd_validate(const Options& o) {
  const auto cfg = require_config(o);
  const auto violations = validate_model(cfg.model, cfg.scaling);
  for (const auto& v : violations) std::cout << "violation: " << v.str() << '\n';
  for (const auto& w : model_warnings(cfg.scaling)) std::cout << "warning: " << w << '\n';
  if (!violations.empty()) return 1;
  const auto cls = classify_landscape(cfg.model, cfg.scaling);
  std::cout << "ok: " << to_string(cls.regime);
  if (!cls.reason.empty()) std::cout << " (" << cls.reason << ')';
  std::cout << '\n';
  return 0;
}

int cmd_theory(const Options& o) {
  const auto cfg = require_config(o);
  const auto violations = validate_model(cfg.model, cfg.scaling);
  for (const auto& v : violations) std::cerr << "violation: " << v.str() << '\n';
  if (!violations.empty()) return 1;
  const auto cls = classify_landscape(cfg.model, cfg.scaling);
  json j;
  j["provenance"] = provenance(cfg, std::nullopt);
  j["classification"] = io::to_json(cls);
  if (cls.strict())
    j["report"] = io::to_json(strict_valley_report(cfg.model, cfg.scaling));
  else if (cls.pitstop())
    j["report"] = io::to_json(pitstop_crossing_rate(cfg.model, cfg.scaling));
  else
    j["fitness_table"] = io::to_json(compute_fitness_table(cfg.model));
  emit(o, "theory.json", j.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto cfg = require_config(o);
  const auto violations = validate_model(cfg.model, cfg.scaling);
  for (const auto& v : violations) std::cerr << "violation: " << v.str() << '\n';
  if (!violations.empty()) return 1;
  const std::uint64_t seed = resolve_seed(o);
  const Dynamics dyn = make_dynamics(cfg.model, cfg.scaling);
  Simulator sim(dyn, initial_state(cfg.model, cfg.scaling, dyn));
  Rng rng = make_stream(seed, 0);
  const double stride = cfg.experiment.value("sample_stride", default_sample_stride(dyn));
  const auto res = sim.run(cfg.stop, rng, stride);

  std::ostringstream traj, arr;
  io::provenance_line(traj, cfg.hash, seed);
  io::write_trajectory_csv(traj, res.observables.trajectory, dyn.traits);
  io::provenance_line(arr, cfg.hash, seed);
  io::write_arrivals_csv(arr, res.observables.first_arrival);
  json run{{"provenance", provenance(cfg, seed)},
           {"reason", to_string(res.reason)},
           {"time", res.final_state.time},
           {"events", res.final_state.events},
           {"final_counts", res.final_state.counts},
           {"peak", res.observables.peak},
           {"max_audit_error", res.final_state.max_audit_error}};
  if (o.out.empty()) {
    if (o.format == "csv")
      std::cout << traj.str();
    else
      std::cout << run.dump(2) << '\n';
    return 0;
  }
  emit(o, "trajectory.csv", traj.str());
  emit(o, "arrivals.csv", arr.str());
  emit(o, "run.json", run.dump(2) + "\n");
  return 0;
}

template <class T>
void take(const json& e, const char* key, T& field) {
  if (e.contains(key)) field = e.at(key).get<T>();
}

harness::SummaryStats run_experiment(const Options& o, const std::string& kind, std::uint64_t seed,
                                     std::optional<io::Config>& cfg) {
  const bool model_free =
      kind == "excursion" || kind == "extinction" || kind == "survival" || kind == "w_law" || kind == "boundary";
  if (!model_free || !o.config.empty()) cfg = require_config(o);
  const json e = cfg ? cfg->experiment : json::object();
  auto reps = [&](std::size_t fallback) {
    std::size_t n = e.value("replicas", fallback);
    if (o.replicas) n = *o.replicas;
    return n;
  };
  if (kind == "crossing") {
    harness::CrossingSpec s{cfg->model, cfg->scaling};
    s.stop = cfg->stop;
    s.replicas = reps(s.replicas);
    s.base_seed = seed;
    s.workers = o.workers;
    take(e, "ks_alpha", s.ks_alpha);
    take(e, "mean_factor", s.mean_factor);
    return harness::run_crossing_experiment(s);
  }
  if (kind == "stability") {
    harness::StabilitySpec s{cfg->model, cfg->scaling};
    s.replicas = reps(s.replicas);
    s.base_seed = seed;
    s.workers = o.workers;
    take(e, "periods", s.periods);
    take(e, "band", s.band);
    take(e, "burn_in", s.burn_in);
    take(e, "sample_stride", s.sample_stride);
    take(e, "mutant_mass_epsilon", s.mutant_mass_epsilon);
    take(e, "max_exceedance", s.max_exceedance);
    return harness::resident_stability_experiment(s);
  }
  if (kind == "mesoscopic") {
    harness::MesoscopicSpec s{cfg->model, cfg->scaling};
    s.replicas = reps(s.replicas);
    s.base_seed = seed;
    s.workers = o.workers;
    take(e, "periods", s.periods);
    take(e, "burn_in", s.burn_in);
    take(e, "relative_tolerance", s.relative_tolerance);
    take(e, "edge_factor", s.edge_factor);
    take(e, "band", s.resident_band);
    return harness::mesoscopic_experiment(s);
  }
  if (kind == "ode") {
    harness::OdeComparisonSpec s{cfg->model, cfg->scaling, {}};
    s.replicas = reps(s.replicas);
    s.base_seed = seed;
    s.workers = o.workers;
    take(e, "initial_density", s.initial_density);
    take(e, "horizon", s.horizon);
    take(e, "epsilon", s.epsilon);
    take(e, "step", s.step);
    take(e, "sample_stride", s.sample_stride);
    take(e, "max_exceedance", s.max_exceedance);
    return harness::ode_comparison_experiment(s);
  }
  if (kind == "pitstop_peak") {
    harness::PitstopPeakSpec s{cfg->model, cfg->scaling};
    s.replicas = reps(s.replicas);
    s.base_seed = seed;
    s.workers = o.workers;
    take(e, "lambdas", s.lambdas);
    take(e, "periods", s.periods);
    take(e, "stop_L_fraction", s.stop_L_fraction);
    take(e, "min_episodes", s.min_episodes);
    take(e, "slope_tolerance", s.slope_tolerance);
    return harness::pitstop_peak_experiment(s);
  }
  if (kind == "excursion") {
    harness::ExcursionSpec s;
    take(e, "birth", s.birth);
    take(e, "death", s.death);
    s.runs = reps(s.runs);
    s.base_seed = seed;
    return harness::excursion_experiment(s);
  }
  if (kind == "extinction") {
    harness::ExtinctionSpec s;
    take(e, "birth", s.birth);
    take(e, "death", s.death);
    take(e, "times", s.times);
    s.runs = reps(s.runs);
    s.base_seed = seed;
    return harness::extinction_experiment(s);
  }
  if (kind == "survival") {
    harness::SurvivalSpec s;
    take(e, "birth", s.birth);
    take(e, "death", s.death);
    take(e, "cap", s.cap);
    s.runs = reps(s.runs);
    s.base_seed = seed;
    return harness::survival_experiment(s);
  }
  if (kind == "w_law") {
    harness::WSpec s;
    take(e, "birth", s.birth);
    take(e, "death", s.death);
    s.samples = reps(s.samples);
    s.base_seed = seed;
    return harness::w_law_experiment(s);
  }
  if (kind == "boundary") {
    harness::BoundarySpec s;
    s.runs = reps(s.runs);
    s.base_seed = seed;
    return harness::boundary_extinction_experiment(s);
  }
  throw io::ConfigError("unknown experiment kind '" + kind + "'");
}

int cmd_experiment(const Options& o) {
  const std::uint64_t seed = resolve_seed(o);
  std::optional<io::Config> cfg;
  harness::SummaryStats s;
  try {
    s = run_experiment(o, o.kind, seed, cfg);
  } catch (const nlohmann::json::exception& e) {
    throw io::ConfigError(std::string("experiment section: ") + e.what());
  }
  json j = io::to_json(s);
  j["provenance"] = {{"config_hash", cfg ? cfg->hash : std::string("none")}, {"seed", seed}};
  std::ostringstream csv;
  io::provenance_line(csv, cfg ? cfg->hash : "none", seed);
  io::write_samples_csv(csv, s);
  if (o.out.empty()) {
    std::cout << (o.format == "csv" ? csv.str() : j.dump(2) + "\n");
  } else {
    emit(o, "summary.json", j.dump(2) + "\n");
    emit(o, "replicas.csv", csv.str());
  }
  for (const auto& c : s.criteria)
    std::cerr << (c.pass ? "PASS " : (c.informational ? "INFO " : "FAIL ")) << c.name << " = " << c.value << '\n';
  return s.passed() ? 0 : 1;
}

int cmd_selftest(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(20240601);
  bool ok = true;
  auto report = [&](const harness::SummaryStats& s) {
    std::cout << (s.passed() ? "PASS " : "FAIL ") << s.kind << '\n';
    ok = ok && s.passed();
  };
  report(harness::excursion_experiment({.base_seed = seed}));
  report(harness::extinction_experiment({.base_seed = seed + 1}));
  report(harness::survival_experiment({.base_seed = seed + 2}));
  report(harness::w_law_experiment({.base_seed = seed + 3}));
  report(harness::boundary_extinction_experiment({.base_seed = seed + 4}));

  // Logistic closed form against the integrator.
  ModelSpec m;
  m.num_traits = 1;
  m.phases = {PhaseSpec{1.0, {2.0, 0.0}, {1.0, 1.0}, {{1.0, 1.0}, {1.0, 1.0}}}};
  const double t1 = 5.0, n0 = 0.01;
  const auto traj = ode::integrate({n0, 0.0}, 0.0, t1, m, 1.0, 1e-3);
  const double exact = 1.0 / (1.0 + (1.0 / n0 - 1.0) * std::exp(-t1));
  const bool ode_ok = std::abs(traj.back().densities[0] - exact) < 1e-8;
  std::cout << (ode_ok ? "PASS " : "FAIL ") << "ode_logistic\n";
  ok = ok && ode_ok;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"valley: fitness valley crossing under periodic environments"};
  app.require_subcommand(1);
  Options o;
  auto global = [&](CLI::App* sub, bool config) {
    if (config) sub->add_option("--config", o.config, "JSON config file");
    sub->add_option("--seed", o.seed, "base seed (generated and printed when absent)");
    sub->add_option("--replicas", o.replicas, "number of replicas");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  };
  auto* validate = app.add_subcommand("validate", "check a config and classify its landscape");
  global(validate, true);
  auto* theory = app.add_subcommand("theory", "fitness table and crossing-rate report");
  global(theory, true);
  auto* simulate = app.add_subcommand("simulate", "one replica; trajectory and arrival CSV");
  global(simulate, true);
  auto* experiment = app.add_subcommand("experiment", "replicated experiment");
  global(experiment, true);
  experiment
      ->add_option("kind", o.kind,
                   "crossing|stability|mesoscopic|ode|pitstop_peak|excursion|extinction|survival|w_law|boundary")
      ->required();
  auto* selftest = app.add_subcommand("selftest", "birth-death and ODE oracle suites");
  global(selftest, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*validate) return cmd_validate(o);
    if (*theory) return cmd_theory(o);
    if (*simulate) return cmd_simulate(o);
    if (*experiment) return cmd_experiment(o);
    if (*selftest) return cmd_selftest(o);
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

// ssid: command-line front end for the identification library.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ssid/bounds.hpp"
#include "ssid/error.hpp"
#include "ssid/harness.hpp"
#include "ssid/identify.hpp"
#include "ssid/metrics.hpp"
#include "ssid/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssid;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitThreshold = 3;

struct Common {
  std::string config;
  std::vector<std::int64_t> grid;
  std::optional<int> trials;
  std::string preset;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path + ": " + e.what());
  }
}

// A config file is either a bare system {A, C, Q, R} or an experiment config.
ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    const json j = read_json(c.config);
    if (j.contains("A")) {
      try {
        cfg.system = j.get<StateSpace>();
      } catch (const json::exception& e) {
        throw Error(ErrorKind::ConfigError, e.what());
      }
      cfg.system.validate();
    } else {
      cfg = config_from_json(j);
    }
  } else if (!c.preset.empty()) {
    cfg = config_for_preset(c.preset);
  } else {
    cfg = config_for_preset("scalar");
  }
  if (!c.preset.empty() && !c.config.empty()) {
    const auto& p = find_preset(c.preset);
    cfg.preset = p.name;
    cfg.system = p.system;
  }
  if (!c.grid.empty()) cfg.n_grid = c.grid;
  if (cfg.n_grid.empty()) cfg.n_grid = {250, 500, 1000, 2000, 4000, 8000, 16000};
  if (c.trials) cfg.trials = *c.trials;
  if (c.seed) cfg.master_seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

void add_common(CLI::App* app, Common& c, bool with_jobs = false, bool with_out = false) {
  app->add_option("--config", c.config, "JSON system or experiment config");
  app->add_option("--preset", c.preset, "built-in system");
  app->add_option("--seed", c.seed, "master seed");
  if (with_jobs) {
    app->add_option("--grid", c.grid, "sample counts")->delimiter(',');
    app->add_option("--trials", c.trials, "trials per grid point");
    app->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  }
  if (with_out) app->add_option("--out", c.out, "output directory");
}

int cmd_presets() {
  for (const auto& p : presets())
    std::cout << std::left << std::setw(12) << p.name << " n=" << p.system.n() << " m=" << p.system.m()
              << " f=" << p.f << " c_p=" << p.c_p << "  " << p.description << '\n';
  return 0;
}

int cmd_dare(const Common& c) {
  const auto cfg = load_config(c);
  const auto kf = solve_dare(cfg.system);
  json j = kf;
  j["assumptions"] = check_assumptions(kf);
  print_json(j);
  return 0;
}

int cmd_simulate(const Common& c, std::int64_t nbar, bool statespace) {
  const auto cfg = load_config(c);
  if (nbar < 1) throw Error(ErrorKind::ConfigError, "--length must be positive");
  const auto kf = solve_dare(cfg.system);
  const SimConfig sc{nbar, cfg.master_seed};
  const auto traj = statespace ? simulate_statespace(cfg.system, kf, sc) : simulate_innovation(kf, sc);
  if (c.out.empty()) {
    write_trajectory_csv(std::cout, traj);
    return 0;
  }
  fs::create_directories(c.out);
  std::ofstream os(fs::path(c.out) / "trajectory.csv");
  if (!os) throw Error(ErrorKind::IoError, "cannot write " + c.out);
  write_trajectory_csv(os, traj);
  return 0;
}

int cmd_identify(const Common& c, const std::string& trajectory, std::int64_t N, std::optional<int> p,
                 std::optional<int> f) {
  auto cfg = load_config(c);
  if (p) cfg.p_rule.fixed = *p;
  if (f) cfg.f = *f;
  const auto kf = solve_dare(cfg.system);

  Trajectory traj;
  std::int64_t n_cols = N;
  HankelParams hp;
  if (!trajectory.empty()) {
    std::ifstream in(trajectory);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open " + trajectory);
    traj = read_trajectory_csv(in);
    // N depends on p; fix p from the available length
    hp = cfg.horizons(std::max<std::int64_t>(1, traj.length() - cfg.f + 1));
    n_cols = traj.length() - hp.p - hp.f + 1;
  } else {
    hp = cfg.horizons(N);
    traj = simulate_innovation(kf, {N + hp.p + hp.f - 1, cfg.master_seed});
  }

  const auto [he, real] = identify(traj, hp, kf.n());
  json j;
  j["N"] = n_cols;
  j["p"] = hp.p;
  j["f"] = hp.f;
  j["estimate"] = he;
  j["realization"] = real;
  if (traj.has_diagnostics() || trajectory.empty()) {
    const auto ref = reference_realization(kf, hp);
    const auto err = error_metrics(real, ref, he.ghat, hankel_true(kf, hp), hp.f, hp.p);
    j["errors"] = {{"err_g", err.err_g},     {"err_a", err.err_a},           {"err_c", err.err_c},
                   {"err_k", err.err_k},     {"err_markov", err.err_markov}, {"err_spectrum", err.err_spectrum}};
  }
  print_json(j);
  return 0;
}

int cmd_bounds(const Common& c, std::int64_t N, std::optional<int> p, std::optional<int> f,
               std::optional<double> delta, bool simplified) {
  auto cfg = load_config(c);
  if (p) cfg.p_rule.fixed = *p;
  if (f) cfg.f = *f;
  if (delta) cfg.delta = *delta;
  const auto kf = solve_dare(cfg.system);
  const BoundInputs bi{kf, cfg.horizons(N), N, cfg.delta, cfg.c_universal};
  print_json(hankel_error_bound(bi, simplified));
  return 0;
}

int cmd_sweep(const Common& c, bool assert_slope, double lo, double hi) {
  const auto cfg = load_config(c);
  cfg.validate();
  const auto res = sweep(cfg, c.jobs);
  write_sweep_outputs(res);
  std::cout << "slope " << res.fit.slope << " ± " << res.fit.stderr_slope << " over " << res.fit.points
            << " points, " << res.wall_seconds << " s\n"
            << "wrote " << (cfg.output_dir / "trials.csv").string() << '\n';
  if (assert_slope) {
    const bool ok = res.fit.points >= 2 && std::isfinite(res.fit.slope) && res.fit.slope >= lo && res.fit.slope <= hi;
    std::cout << (ok ? "PASS" : "FAIL") << " slope in [" << lo << ", " << hi << "]\n";
    if (!ok) return kExitThreshold;
  }
  return 0;
}

int cmd_verify(const Common& c, int seeds) {
  const auto cfg = load_config(c);
  cfg.validate();
  MartingaleExperiment mart;
  mart.master_seed = cfg.master_seed;
  mart.seeds = seeds;
  const auto rep = verify_bounds(cfg, c.jobs, mart);
  write_sweep_outputs(rep.sweep);
  const json j = coverage_json(rep);
  std::ofstream os(cfg.output_dir / "coverage.json");
  if (!os) throw Error(ErrorKind::IoError, "cannot write coverage.json");
  os << j.dump(2) << '\n';
  print_json(j);
  bool ok = rep.martingale.within_floor;
  for (const auto& r : rep.rows) ok = ok && r.coverage_ok;
  return ok ? 0 : kExitThreshold;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-sample subspace identification of stochastic linear systems"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  Common c;
  auto* presets_cmd = app.add_subcommand("presets", "list built-in systems");

  auto* dare = app.add_subcommand("dare", "steady-state Kalman filter of a system");
  add_common(dare, c);

  std::int64_t length = 1000;
  bool statespace = false;
  auto* sim = app.add_subcommand("simulate", "emit a trajectory CSV");
  add_common(sim, c, false, true);
  sim->add_option("--length", length, "number of samples");
  sim->add_flag("--statespace", statespace, "simulate the original state-space form");

  std::string trajectory;
  std::int64_t N = 1000;
  std::optional<int> p, f;
  std::optional<double> delta;
  auto* ident = app.add_subcommand("identify", "one-shot estimate");
  add_common(ident, c);
  ident->add_option("--trajectory", trajectory, "trajectory CSV; simulated when absent");
  ident->add_option("-N,--samples", N, "regression columns for a fresh simulation");
  ident->add_option("-p", p, "past horizon");
  ident->add_option("-f", f, "future horizon");

  bool simplified = false;
  auto* bounds = app.add_subcommand("bounds", "print the Hankel error bound report");
  add_common(bounds, c);
  bounds->add_option("-N,--samples", N, "sample count");
  bounds->add_option("-p", p, "past horizon");
  bounds->add_option("-f", f, "future horizon");
  bounds->add_option("--delta", delta, "confidence parameter");
  bounds->add_flag("--simplified", simplified, "use the simplified cross term");

  bool assert_slope = false;
  double lo = -0.65, hi = -0.35;
  auto* sw = app.add_subcommand("sweep", "Monte Carlo sweep over N");
  add_common(sw, c, true, true);
  sw->add_flag("--assert-slope", assert_slope, "exit 3 when the fitted slope leaves [slope-min, slope-max]");
  sw->add_option("--slope-min", lo);
  sw->add_option("--slope-max", hi);

  int seeds = 2000;
  auto* vb = app.add_subcommand("verify-bounds", "coverage of the theoretical bounds");
  add_common(vb, c, true, true);
  vb->add_option("--martingale-seeds", seeds)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*presets_cmd) return cmd_presets();
    if (*dare) return cmd_dare(c);
    if (*sim) return cmd_simulate(c, length, statespace);
    if (*ident) return cmd_identify(c, trajectory, N, p, f);
    if (*bounds) return cmd_bounds(c, N, p, f, delta, simplified);
    if (*sw) return cmd_sweep(c, assert_slope, lo, hi);
    if (*vb) return cmd_verify(c, seeds);
  } catch (const Error& e) {
    std::cerr << "ssid: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::ConfigError:
      case ErrorKind::InvalidArgument:
      case ErrorKind::InvalidModel:
        return kExitConfig;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "ssid: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

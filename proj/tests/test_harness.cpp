#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "ssid/error.hpp"
#include "ssid/harness.hpp"
#include "support.hpp"

using namespace ssid;

namespace {

ExperimentConfig small_scalar(std::vector<std::int64_t> grid = {250, 1000, 4000}, int trials = 8) {
  auto cfg = config_for_preset("scalar");
  cfg.n_grid = std::move(grid);
  cfg.trials = trials;
  cfg.master_seed = 17;
  return cfg;
}

std::string csv_of(const std::vector<TrialRecord>& rows) {
  std::ostringstream os;
  write_trials_csv(os, rows);
  return os.str();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("presets") {
  CHECK(presets().size() >= 4);
  for (const auto& p : presets()) {
    const auto kf = solve_dare(p.system);
    CHECK(spectral_radius(kf.closed_loop()) < 1.0);
    CHECK(p.f >= p.system.n() + 1);
  }
  CHECK(kind_of([] { find_preset("nope"); }) == ErrorKind::ConfigError);
}

TEST_CASE("logarithmic past horizon") {
  PRule r;
  r.c_p = 0.8;
  CHECK(r.horizon(250, 1) == static_cast<int>(std::ceil(0.8 * std::log(250.0))));
  CHECK(r.horizon(3, 4) == 5);
  r.fixed = 3;
  CHECK(r.horizon(100000, 1) == 3);
}

TEST_CASE("config validation") {
  auto cfg = small_scalar();
  CHECK_NOTHROW(cfg.validate());

  auto bad = cfg;
  bad.n_grid = {1000, 500};
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::ConfigError);
  bad = cfg;
  bad.trials = 0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::ConfigError);
  bad = cfg;
  bad.delta = 1.5;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::ConfigError);

  // regression infeasible: N < m·p
  auto mimo = config_for_preset("mimo");
  mimo.p_rule.fixed = 40;
  mimo.n_grid = {50, 1000};
  mimo.trials = 1;
  CHECK(kind_of([&] { mimo.validate(); }) == ErrorKind::ConfigError);
  CHECK(kind_of([&] { sweep(mimo); }) == ErrorKind::ConfigError);
}

TEST_CASE("config JSON round trip") {
  const auto j = nlohmann::json::parse(R"({
    "preset": "jordan", "n_grid": [300, 600], "trials": 3, "c_p": 1.1,
    "delta": 0.05, "master_seed": 99, "output_dir": "somewhere"})");
  const auto cfg = config_from_json(j);
  CHECK(cfg.preset == "jordan");
  CHECK(cfg.system.n() == 2);
  CHECK(cfg.n_grid == std::vector<std::int64_t>{300, 600});
  CHECK(cfg.trials == 3);
  CHECK(cfg.p_rule.c_p == 1.1);
  CHECK_FALSE(cfg.p_rule.fixed.has_value());
  CHECK(cfg.f == find_preset("jordan").f);
  CHECK(cfg.master_seed == 99);

  const auto back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));

  const auto sys = config_from_json(nlohmann::json::parse(R"({
    "system": {"A": [[0.5]], "C": [[2.0]], "Q": [[1.0]], "R": [[0.5]]}, "n_grid": [500], "p": 3})"));
  CHECK(sys.preset.empty());
  CHECK(sys.system.C(0, 0) == 2.0);
  CHECK(*sys.p_rule.fixed == 3);

  CHECK(kind_of([] { config_from_json(nlohmann::json::parse(R"({"n_grid": [10]})")); }) == ErrorKind::ConfigError);
  CHECK(kind_of([] { config_from_json(nlohmann::json::parse(R"({"preset": "scalar", "trials": "many"})")); }) ==
        ErrorKind::ConfigError);
}

TEST_CASE("trial determinism") {
  const auto cfg = small_scalar();
  const auto a = run_trial(cfg, 1000, 3);
  const auto b = run_trial(cfg, 1000, 3);
  CHECK(a.ok());
  CHECK(a.seed == b.seed);
  CHECK(a.errors.err_g == b.errors.err_g);
  CHECK(a.errors.err_a == b.errors.err_a);
  CHECK(a.errors.pe_margin == b.errors.pe_margin);
  CHECK(run_trial(cfg, 1000, 4).seed != a.seed);
  CHECK(trial_seed(17, 1000, 3) == a.seed);
  CHECK(trial_seed(17, 1000, 3) != trial_seed(17, 1003, 0));
}

TEST_CASE("parallel cells equal the serial reference") {
  const auto ex = prepare_experiment(small_scalar());
  const auto serial = run_cells_serial(ex);
  CHECK(serial.size() == 24);
  for (int jobs : {1, 2, 4}) CHECK(csv_of(run_cells(ex, jobs)) == csv_of(serial));
}

TEST_CASE("trial CSV") {
  const auto ex = prepare_experiment(small_scalar({250, 500}, 5));
  const auto text = csv_of(run_cells(ex, 2));
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  CHECK(line == "N,trial,seed,err_g,err_a,err_c,err_k,err_markov,err_spectrum,pe_y,pe_e,pe_margin,bound_total,status");
  int rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 13);
  }
  CHECK(rows == 10);
}

TEST_CASE("failed trials stay in the output") {
  TrialRecord bad;
  bad.N = 10;
  bad.status = "PersistenceFailure";
  bad.errors.err_g = std::nan("");
  const auto text = csv_of({bad});
  CHECK(text.find("PersistenceFailure") != std::string::npos);
  CHECK(text.find("nan") != std::string::npos);
}

TEST_CASE("sweep outputs") {
  auto cfg = small_scalar({250, 1000, 4000}, 20);
  cfg.output_dir = std::filesystem::temp_directory_path() / "ssid_harness_test";
  std::filesystem::remove_all(cfg.output_dir);
  const auto res = sweep(cfg, 2);
  write_sweep_outputs(res);
  CHECK(std::filesystem::exists(cfg.output_dir / "trials.csv"));
  std::ifstream js(cfg.output_dir / "summary.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j.at("config") == config_to_json(cfg));
  CHECK(j.at("version").get<std::string>() == version_string());
  CHECK(j.at("timings").contains("wall_seconds"));
  CHECK(j.at("grid").size() == 3);
  CHECK(res.fit.points == 3);
  CHECK(res.fit.slope < 0.0);
  for (const auto& s : res.summary) CHECK(s.q25_err_g <= s.median_err_g);
  CHECK(res.summary.front().median_err_g > res.summary.back().median_err_g);

  auto blocked = cfg;
  blocked.output_dir = cfg.output_dir / "trials.csv" / "sub";
  CHECK(kind_of([&] { write_sweep_outputs({blocked, res.trials, res.summary, res.bounds, res.fit, 0.0}); }) ==
        ErrorKind::IoError);
  std::filesystem::remove_all(cfg.output_dir);
}

TEST_CASE("slope fit") {
  std::vector<GridSummary> pts;
  for (std::int64_t N : {100, 1000, 10000}) {
    GridSummary s;
    s.N = N;
    s.trials = 10;
    s.succeeded = 10;
    s.median_err_g = 3.0 * std::pow(static_cast<double>(N), -0.5);
    pts.push_back(s);
  }
  auto fit = fit_slope(pts);
  CHECK(fit.slope == doctest::Approx(-0.5));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)));
  CHECK(fit.points == 3);
  pts[1].succeeded = 8;  // below 90% success, dropped
  pts[1].median_err_g = 100.0;
  fit = fit_slope(pts);
  CHECK(fit.points == 2);
  CHECK(fit.slope == doctest::Approx(-0.5));
}

TEST_CASE("doubling trials shrinks the bootstrap slope error by about sqrt 2") {
  const std::vector<std::int64_t> grid = {250, 1000, 4000};
  const auto few = sweep(small_scalar(grid, 60));
  const auto many = sweep(small_scalar(grid, 120));
  const double a = bootstrap_slope_se(few.trials, 400, 1);
  const double b = bootstrap_slope_se(many.trials, 400, 1);
  CHECK(a > 0.0);
  const double ratio = b / a;
  CHECK(ratio > 0.45);
  CHECK(ratio < 0.95);
}

TEST_CASE("martingale sub-experiment") {
  MartingaleExperiment m;
  m.seeds = 300;
  m.horizon = 200;
  const auto r = run_martingale_experiment(m, 2);
  CHECK(r.seeds == 300);
  CHECK(r.within_floor);
  CHECK(run_martingale_experiment(m, 1).violations == r.violations);
  m.delta = 0.0;
  CHECK(kind_of([&] { run_martingale_experiment(m); }) == ErrorKind::InvalidArgument);
}

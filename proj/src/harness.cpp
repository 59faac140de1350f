#include "ssid/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ssid/error.hpp"
#include "ssid/rng.hpp"

#ifndef SSID_VERSION
#define SSID_VERSION "0.1.0"
#endif

namespace ssid {

const char* version_string() { return SSID_VERSION; }

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::vector<Preset> make_presets() {
  std::vector<Preset> out;
  out.push_back({"scalar", "first-order stable system a=0.9, c=1, q=r=1",
                 StateSpace::make(mat({{0.9}}), mat({{1.0}}), mat({{1.0}}), mat({{1.0}})), 2, 0.8});
  out.push_back({"jordan", "marginally stable double integrator (Jordan block at 1), c=[1 0], Q=I, r=1",
                 StateSpace::make(mat({{1.0, 1.0}, {0.0, 1.0}}), mat({{1.0, 0.0}}), Matrix::Identity(2, 2),
                                  mat({{1.0}})),
                 3, 0.8});
  const double rho = 0.95;
  const double th = 0.3;
  out.push_back({"oscillator", "damped rotation, radius 0.95, angle 0.3 rad, scalar output",
                 StateSpace::make(mat({{rho * std::cos(th), -rho * std::sin(th)}, {rho * std::sin(th), rho * std::cos(th)}}),
                                  mat({{1.0, 0.5}}), 0.5 * Matrix::Identity(2, 2), mat({{1.0}})),
                 3, 1.2});
  out.push_back({"mimo", "three states, two outputs, stable",
                 StateSpace::make(mat({{0.7, 0.2, 0.0}, {0.0, 0.5, 0.3}, {0.1, 0.0, -0.6}}),
                                  mat({{1.0, 0.0, 0.5}, {0.0, 1.0, -0.5}}), Matrix::Identity(3, 3),
                                  mat({{1.0, 0.2}, {0.2, 0.8}})),
                 4, 1.0});
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

template <class F>
void parallel_for(std::int64_t count, int jobs, F&& body) {
#ifdef _OPENMP
  if (jobs > 1) {
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
#endif
  (void)jobs;
  for (std::int64_t i = 0; i < count; ++i) body(i);
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = make_presets();
  return all;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw Error(ErrorKind::ConfigError, "unknown preset '" + name + "'");
}

int PRule::horizon(std::int64_t N, Eigen::Index n) const {
  if (fixed) return *fixed;
  const double raw = std::ceil(c_p * std::log(static_cast<double>(N)));
  return std::max(static_cast<int>(n) + 1, static_cast<int>(raw));
}

HankelParams ExperimentConfig::horizons(std::int64_t N) const { return {p_rule.horizon(N, system.n()), f}; }

void ExperimentConfig::validate() const {
  try {
    system.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  if (n_grid.empty()) throw Error(ErrorKind::ConfigError, "n_grid is empty");
  for (size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw Error(ErrorKind::ConfigError, "n_grid must be strictly ascending");
  if (trials < 1) throw Error(ErrorKind::ConfigError, "trials must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::ConfigError, "delta must lie in (0, 1)");
  if (!(c_universal > 0.0)) throw Error(ErrorKind::ConfigError, "c_universal must be positive");
  if (!p_rule.fixed && !(p_rule.c_p > 0.0)) throw Error(ErrorKind::ConfigError, "c_p must be positive");
  const auto n = system.n();
  const auto m = system.m();
  if (f < n + 1) throw Error(ErrorKind::ConfigError, "f must be at least n + 1");
  for (auto N : n_grid) {
    const int p = p_rule.horizon(N, n);
    if (p < n + 1) throw Error(ErrorKind::ConfigError, "p must be at least n + 1");
    if (N < m * p)
      throw Error(ErrorKind::ConfigError, "grid point N=" + std::to_string(N) + " is below m*p=" +
                                              std::to_string(m * p));
  }
}

ExperimentConfig config_for_preset(const std::string& name) {
  const Preset& p = find_preset(name);
  ExperimentConfig cfg;
  cfg.preset = p.name;
  cfg.system = p.system;
  cfg.f = p.f;
  cfg.p_rule.c_p = p.c_p;
  return cfg;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("preset")) {
      cfg = config_for_preset(j.at("preset").get<std::string>());
    } else if (j.contains("system")) {
      cfg.system = j.at("system").get<StateSpace>();
      cfg.f = static_cast<int>(cfg.system.n()) + 1;
    } else {
      throw Error(ErrorKind::ConfigError, "config needs either \"preset\" or \"system\"");
    }
    if (j.contains("n_grid")) cfg.n_grid = j.at("n_grid").get<std::vector<std::int64_t>>();
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (j.contains("p")) cfg.p_rule.fixed = j.at("p").get<int>();
    if (j.contains("c_p")) {
      cfg.p_rule.c_p = j.at("c_p").get<double>();
      cfg.p_rule.fixed.reset();
    }
    if (j.contains("f")) cfg.f = j.at("f").get<int>();
    if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("c_universal")) cfg.c_universal = j.at("c_universal").get<double>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, e.what());
  }
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (!cfg.preset.empty()) j["preset"] = cfg.preset;
  j["system"] = cfg.system;
  j["n_grid"] = cfg.n_grid;
  j["trials"] = cfg.trials;
  if (cfg.p_rule.fixed)
    j["p"] = *cfg.p_rule.fixed;
  else
    j["c_p"] = cfg.p_rule.c_p;
  j["f"] = cfg.f;
  j["delta"] = cfg.delta;
  j["master_seed"] = cfg.master_seed;
  j["c_universal"] = cfg.c_universal;
  j["output_dir"] = cfg.output_dir.string();
  return j;
}

Experiment prepare_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  Experiment ex;
  ex.cfg = cfg;
  ex.kf = solve_dare(cfg.system);
  for (auto N : cfg.n_grid) {
    GridPoint gp;
    gp.N = N;
    gp.hp = cfg.horizons(N);
    gp.g = hankel_true(ex.kf, gp.hp);
    gp.reference = reference_realization(ex.kf, gp.hp);
    gp.bound = hankel_error_bound({ex.kf, gp.hp, N, cfg.delta, cfg.c_universal}, false);
    ex.grid.push_back(std::move(gp));
  }
  return ex;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::int64_t N, int trial_index) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(trial_index));
}

TrialRecord run_trial(const Experiment& ex, std::size_t grid_index, int trial_index) {
  const GridPoint& gp = ex.grid.at(grid_index);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrialRecord rec;
  rec.N = gp.N;
  rec.trial = trial_index;
  rec.seed = trial_seed(ex.cfg.master_seed, gp.N, trial_index);
  rec.bound_total = gp.bound.total_bound;
  rec.errors = {nan, nan, nan, nan, nan, nan, false, false, nan};
  try {
    const auto nbar = gp.N + gp.hp.p + gp.hp.f - 1;
    const Trajectory traj = simulate_innovation(ex.kf, {nbar, rec.seed});
    const DataMatrices dm = build_data_matrices(traj, gp.hp);
    const PeEvents pe = pe_events(dm, ex.kf, gp.hp);
    rec.errors.pe_y = pe.pe_y;
    rec.errors.pe_e = pe.pe_e;
    rec.errors.pe_margin = pe.pe_margin;
    const HankelEstimate he = regress_hankel(dm);
    rec.errors.err_g = linalg::spectral_norm(he.ghat - gp.g);
    const Realization est = balanced_realization(he, ex.kf.n(), ex.kf.m(), gp.hp.f, gp.hp.p);
    ErrorRecord full = error_metrics(est, gp.reference, he.ghat, gp.g, gp.hp.f, gp.hp.p);
    full.pe_y = pe.pe_y;
    full.pe_e = pe.pe_e;
    full.pe_margin = pe.pe_margin;
    rec.errors = full;
  } catch (const Error& e) {
    rec.status = to_string(e.kind());
  } catch (const std::exception&) {
    rec.status = "InternalError";
  }
  return rec;
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::int64_t N, int trial_index) {
  ExperimentConfig one = cfg;
  one.n_grid = {N};
  return run_trial(prepare_experiment(one), 0, trial_index);
}

std::vector<TrialRecord> run_cells(const Experiment& ex, int jobs) {
  const std::int64_t per = ex.cfg.trials;
  const std::int64_t total = per * static_cast<std::int64_t>(ex.grid.size());
  std::vector<TrialRecord> out(static_cast<size_t>(total));
  parallel_for(total, jobs, [&](std::int64_t cell) {
    out[static_cast<size_t>(cell)] = run_trial(ex, static_cast<size_t>(cell / per), static_cast<int>(cell % per));
  });
  return out;
}

std::vector<TrialRecord> run_cells_serial(const Experiment& ex) {
  std::vector<TrialRecord> out;
  out.reserve(ex.grid.size() * static_cast<size_t>(ex.cfg.trials));
  for (size_t g = 0; g < ex.grid.size(); ++g)
    for (int t = 0; t < ex.cfg.trials; ++t) out.push_back(run_trial(ex, g, t));
  return out;
}

std::vector<GridSummary> summarize(const std::vector<TrialRecord>& trials, const Experiment& ex) {
  std::vector<GridSummary> out;
  for (const auto& gp : ex.grid) {
    GridSummary s;
    s.N = gp.N;
    s.p = gp.hp.p;
    std::vector<double> eg, ea, ec, ek;
    int pe = 0, margin = 0, covered = 0;
    for (const auto& r : trials) {
      if (r.N != gp.N) continue;
      ++s.trials;
      if (!r.ok()) continue;
      ++s.succeeded;
      eg.push_back(r.errors.err_g);
      ea.push_back(r.errors.err_a);
      ec.push_back(r.errors.err_c);
      ek.push_back(r.errors.err_k);
      pe += (r.errors.pe_y && r.errors.pe_e);
      margin += (r.errors.pe_margin >= 0.0);
      covered += (r.errors.err_g <= r.bound_total);
    }
    s.median_err_g = quantile(eg, 0.5);
    s.q25_err_g = quantile(eg, 0.25);
    s.q75_err_g = quantile(eg, 0.75);
    s.median_err_a = quantile(ea, 0.5);
    s.median_err_c = quantile(ec, 0.5);
    s.median_err_k = quantile(ek, 0.5);
    if (s.succeeded > 0) {
      const double k = s.succeeded;
      s.pe_frequency = pe / k;
      s.pe_margin_frequency = margin / k;
      s.coverage = covered / k;
    }
    out.push_back(s);
  }
  return out;
}

SlopeFit fit_slope(const std::vector<GridSummary>& summary) {
  std::vector<double> xs, ys;
  for (const auto& s : summary) {
    if (s.success_fraction() < 0.9 || !(s.median_err_g > 0.0)) continue;
    xs.push_back(std::log(static_cast<double>(s.N)));
    ys.push_back(std::log(s.median_err_g));
  }
  SlopeFit fit;
  fit.points = static_cast<int>(xs.size());
  if (xs.size() < 2) {
    fit.slope = fit.intercept = fit.stderr_slope = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const double k = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (xs.size() > 2) {
    double ssr = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const double r = ys[i] - fit.intercept - fit.slope * xs[i];
      ssr += r * r;
    }
    fit.stderr_slope = std::sqrt(ssr / (k - 2.0) / sxx);
  }
  return fit;
}

double bootstrap_slope_se(const std::vector<TrialRecord>& trials, int resamples, std::uint64_t seed) {
  std::map<std::int64_t, std::vector<double>> by_n;
  std::map<std::int64_t, int> counts;
  for (const auto& r : trials) {
    ++counts[r.N];
    if (r.ok()) by_n[r.N].push_back(r.errors.err_g);
  }
  std::mt19937_64 engine(seed);
  std::vector<double> slopes;
  for (int b = 0; b < resamples; ++b) {
    std::vector<GridSummary> summary;
    for (const auto& [N, errs] : by_n) {
      std::uniform_int_distribution<size_t> pick(0, errs.size() - 1);
      std::vector<double> draw(errs.size());
      for (auto& d : draw) d = errs[pick(engine)];
      GridSummary s;
      s.N = N;
      s.trials = counts[N];
      s.succeeded = static_cast<int>(errs.size());
      s.median_err_g = quantile(std::move(draw), 0.5);
      summary.push_back(s);
    }
    slopes.push_back(fit_slope(summary).slope);
  }
  double mean = 0;
  for (double s : slopes) mean += s;
  mean /= static_cast<double>(slopes.size());
  double var = 0;
  for (double s : slopes) var += (s - mean) * (s - mean);
  return std::sqrt(var / static_cast<double>(slopes.size() - 1));
}

SweepResult sweep(const ExperimentConfig& cfg, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  const Experiment ex = prepare_experiment(cfg);
  SweepResult res;
  res.cfg = cfg;
  res.trials = run_cells(ex, jobs);
  res.summary = summarize(res.trials, ex);
  for (const auto& gp : ex.grid) res.bounds.push_back(gp.bound);
  res.fit = fit_slope(res.summary);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& trials) {
  os << "N,trial,seed,err_g,err_a,err_c,err_k,err_markov,err_spectrum,pe_y,pe_e,pe_margin,bound_total,status\n";
  os << std::setprecision(17);
  for (const auto& r : trials) {
    const auto& e = r.errors;
    os << r.N << ',' << r.trial << ',' << r.seed << ',' << e.err_g << ',' << e.err_a << ',' << e.err_c << ','
       << e.err_k << ',' << e.err_markov << ',' << e.err_spectrum << ',' << (e.pe_y ? 1 : 0) << ','
       << (e.pe_e ? 1 : 0) << ',' << e.pe_margin << ',' << r.bound_total << ',' << r.status << '\n';
  }
}

namespace {

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

}  // namespace

nlohmann::json summary_json(const SweepResult& res) {
  nlohmann::json grid = nlohmann::json::array();
  for (size_t i = 0; i < res.summary.size(); ++i) {
    const auto& s = res.summary[i];
    grid.push_back({{"N", s.N},
                    {"p", s.p},
                    {"trials", s.trials},
                    {"succeeded", s.succeeded},
                    {"median_err_g", finite_or_null(s.median_err_g)},
                    {"q25_err_g", finite_or_null(s.q25_err_g)},
                    {"q75_err_g", finite_or_null(s.q75_err_g)},
                    {"median_err_a", finite_or_null(s.median_err_a)},
                    {"median_err_c", finite_or_null(s.median_err_c)},
                    {"median_err_k", finite_or_null(s.median_err_k)},
                    {"pe_frequency", s.pe_frequency},
                    {"pe_margin_frequency", s.pe_margin_frequency},
                    {"bound_coverage", s.coverage},
                    {"bound", res.bounds.at(i)}});
  }
  return {{"version", version_string()},
          {"config", config_to_json(res.cfg)},
          {"grid", grid},
          {"slope", {{"slope", finite_or_null(res.fit.slope)},
                     {"intercept", finite_or_null(res.fit.intercept)},
                     {"stderr", finite_or_null(res.fit.stderr_slope)},
                     {"points", res.fit.points}}},
          {"timings", {{"wall_seconds", res.wall_seconds}}}};
}

void write_sweep_outputs(const SweepResult& res) {
  const auto& dir = res.cfg.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream csv(dir / "trials.csv");
    if (!csv) throw Error(ErrorKind::IoError, "cannot open " + (dir / "trials.csv").string());
    write_trials_csv(csv, res.trials);
    if (!csv) throw Error(ErrorKind::IoError, "write failed for trials.csv");
  }
  std::ofstream js(dir / "summary.json");
  if (!js) throw Error(ErrorKind::IoError, "cannot open " + (dir / "summary.json").string());
  js << summary_json(res).dump(2) << '\n';
}

MartingaleResult run_martingale_experiment(const MartingaleExperiment& cfg, int jobs) {
  if (cfg.horizon < 1 || cfg.seeds < 1 || !(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw Error(ErrorKind::InvalidArgument, "martingale experiment needs horizon, seeds >= 1 and delta in (0,1)");
  std::vector<char> violated(static_cast<size_t>(cfg.seeds), 0);
  const Matrix v = Matrix::Identity(1, 1);
  const double base = martingale_bound(1, 1, cfg.delta, v, v);
  parallel_for(cfg.seeds, jobs, [&](std::int64_t s) {
    Gaussian rng(derive_seed(cfg.master_seed, 0x6d617274ULL, static_cast<std::uint64_t>(s)));
    double eta_prev = rng();
    double vbar = 1.0;
    double sum = 0.0;
    for (int t = 1; t <= cfg.horizon; ++t) {
      const double x = eta_prev;  // measurable w.r.t. the past
      const double eta = rng();
      vbar += x * x;
      sum += x * eta;
      // scalar form of martingale_bound: base + 4·log(vbar)
      if (sum * sum / vbar > base + 4.0 * std::log(vbar)) {
        violated[static_cast<size_t>(s)] = 1;
        break;
      }
      eta_prev = eta;
    }
  });
  MartingaleResult out;
  out.seeds = cfg.seeds;
  for (char c : violated) out.violations += c;
  out.frequency = static_cast<double>(out.violations) / cfg.seeds;
  out.standard_error = std::sqrt(cfg.delta * (1.0 - cfg.delta) / cfg.seeds);
  out.within_floor = out.frequency <= cfg.delta + 3.0 * out.standard_error;
  return out;
}

CoverageReport verify_bounds(const ExperimentConfig& cfg, int jobs, const MartingaleExperiment& mart) {
  CoverageReport rep;
  rep.sweep = sweep(cfg, jobs);
  for (size_t i = 0; i < rep.sweep.summary.size(); ++i) {
    const auto& s = rep.sweep.summary[i];
    const auto& b = rep.sweep.bounds[i];
    CoverageRow row;
    row.N = s.N;
    row.p = s.p;
    row.trials = s.trials;
    row.bound_coverage = s.coverage;
    row.bound_floor = b.total_probability;
    row.pe_frequency = s.pe_frequency;
    row.pe_floor = clamp01(1.0 - b.delta_n - 2.0 * cfg.delta);
    row.pe_margin_frequency = s.pe_margin_frequency;
    row.binomial_se = s.trials > 0 ? std::sqrt(row.pe_floor * (1.0 - row.pe_floor) / s.trials) : 0.0;
    row.thresholds = b.thresholds;
    const auto& t = b.thresholds;
    row.clears_thresholds = t.n0 > 0 && t.n1 > 0 && t.n2 > 0 && s.N >= t.n0 && s.N >= t.n1 && s.N >= t.n2;
    row.coverage_ok = s.succeeded == s.trials && row.bound_coverage >= row.bound_floor;
    rep.rows.push_back(row);
  }
  rep.martingale = run_martingale_experiment(mart, jobs);
  return rep;
}

nlohmann::json coverage_json(const CoverageReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"N", r.N},
                    {"p", r.p},
                    {"trials", r.trials},
                    {"bound_coverage", r.bound_coverage},
                    {"bound_probability_floor", r.bound_floor},
                    {"coverage_ok", r.coverage_ok},
                    {"pe_frequency", r.pe_frequency},
                    {"pe_probability_floor", r.pe_floor},
                    {"pe_margin_frequency", r.pe_margin_frequency},
                    {"binomial_se", r.binomial_se},
                    {"n0", r.thresholds.n0},
                    {"n1", r.thresholds.n1},
                    {"n2", r.thresholds.n2},
                    {"clears_thresholds", r.clears_thresholds}});
  const auto& m = rep.martingale;
  return {{"version", version_string()},
          {"config", config_to_json(rep.sweep.cfg)},
          {"rows", rows},
          {"martingale", {{"seeds", m.seeds},
                          {"violations", m.violations},
                          {"frequency", m.frequency},
                          {"standard_error", m.standard_error},
                          {"within_floor", m.within_floor}}}};
}

}  // namespace ssid

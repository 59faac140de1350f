#include "ssid/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssid/error.hpp"

namespace ssid {

namespace {

double sq(double x) { return x * x; }

double trace_gamma_prev(const BoundInputs& bi) { return state_covariance(bi.kf, bi.N - 1).trace(); }

struct SystemNorms {
  double rbar;
  double obs_p;
  double toeplitz_p;
  double sigma_e;
};

SystemNorms system_norms(const BoundInputs& bi) {
  const auto& kf = bi.kf;
  return {linalg::spectral_norm(kf.Rbar), linalg::spectral_norm(observability(kf.A(), kf.C(), bi.hp.p)),
          linalg::spectral_norm(toeplitz(kf.A(), kf.C(), kf.K, bi.hp.p)), sigma_e_matrix(kf, bi.hp.p).sigma_min};
}

}  // namespace

void BoundInputs::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::InvalidArgument, "delta must lie in (0, 1)");
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "N must be positive");
  if (hp.p < 1 || hp.f < 1) throw Error(ErrorKind::InvalidArgument, "horizons must be positive");
  if (!(c_universal > 0.0)) throw Error(ErrorKind::InvalidArgument, "c_universal must be positive");
}

Matrix state_covariance(const SteadyKalman& kf, std::int64_t k) {
  if (k < 0) throw Error(ErrorKind::InvalidArgument, "state covariance index must be nonnegative");
  const auto n = kf.n();
  // (Γ_s, A^s) pairs compose as Γ_{r+s} = A^s Γ_r A^sᵀ + Γ_s.
  Matrix gamma = Matrix::Zero(n, n);
  Matrix power = Matrix::Identity(n, n);
  Matrix base_gamma = linalg::symmetrize(kf.K * kf.Rbar * kf.K.transpose());
  Matrix base_power = kf.A();
  while (k > 0) {
    if (k & 1) {
      gamma = linalg::symmetrize(base_power * gamma * base_power.transpose() + base_gamma);
      power = power * base_power;
    }
    k >>= 1;
    if (k > 0) {
      base_gamma = linalg::symmetrize(base_power * base_gamma * base_power.transpose() + base_gamma);
      base_power = base_power * base_power;
    }
  }
  return gamma;
}

PastNoiseCovariance sigma_e_matrix(const SteadyKalman& kf, int p) {
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "p must be positive");
  const Matrix T = toeplitz(kf.A(), kf.C(), kf.K, p);
  const auto m = kf.m();
  Matrix blockdiag = Matrix::Zero(m * p, m * p);
  for (int i = 0; i < p; ++i) blockdiag.block(i * m, i * m, m, m) = kf.Rbar;
  PastNoiseCovariance out;
  out.sigma = linalg::symmetrize(T * blockdiag * T.transpose());
  out.sigma_min = linalg::sigma_min(out.sigma);
  return out;
}

double log_delta_n(std::int64_t N, int p, Eigen::Index m) {
  if (N < 1 || p < 1 || m < 1) throw Error(ErrorKind::InvalidArgument, "N, p, m must be positive");
  const double md = static_cast<double>(m);
  const double a = std::log(2.0 * p * md);
  const double b = std::log(2.0 * (static_cast<double>(N) + p - 1) * md);
  return -a * a * b * b;
}

double delta_n(std::int64_t N, int p, Eigen::Index m) { return std::exp(log_delta_n(N, p, m)); }

double kappa_n(const BoundInputs& bi) {
  bi.validate();
  const auto noise = sigma_e_matrix(bi.kf, bi.hp.p);
  const double obs = linalg::spectral_norm(observability(bi.kf.A(), bi.kf.C(), bi.hp.p));
  return 4.0 / noise.sigma_min * (obs * obs * trace_gamma_prev(bi) + noise.sigma.trace()) + bi.delta;
}

std::pair<double, double> constants_c1_c2(const SteadyKalman& kf, const HankelParams& hp) {
  const double sigma_e = sigma_e_matrix(kf, hp.p).sigma_min;
  const double c1 = 8.0 * std::sqrt(linalg::spectral_norm(kf.Rbar) / sigma_e) *
                    linalg::spectral_norm(toeplitz(kf.A(), kf.C(), kf.K, hp.f));
  const Matrix Op = observability(kf.A(), kf.C(), hp.p);
  const double c2 = 4.0 * linalg::spectral_norm(observability(kf.A(), kf.C(), hp.f)) /
                    linalg::sigma_k(Op, kf.n());
  return {c1, c2};
}

double c_xe(const BoundInputs& bi) {
  const double p = bi.hp.p;
  const double n = static_cast<double>(bi.kf.n());
  const double m = static_cast<double>(bi.kf.m());
  const double obs = linalg::spectral_norm(observability(bi.kf.A(), bi.kf.C(), bi.hp.p));
  return 8.0 * p *
         (0.5 * n * std::log(obs * obs * trace_gamma_prev(bi) / bi.delta + 1.0) +
          std::log(p / bi.delta) + m * std::log(5.0));
}

double gamma_n(const BoundInputs& bi) {
  const auto s = system_norms(bi);
  return 2.0 * s.toeplitz_p * std::sqrt(c_xe(bi) * s.rbar / static_cast<double>(bi.N));
}

double c_n(const BoundInputs& bi) {
  const double p = bi.hp.p;
  const double m = static_cast<double>(bi.kf.m());
  const auto s = system_norms(bi);
  const double inner = 0.5 * m * p * p *
                           std::log(2.0 * sq(s.obs_p) * trace_gamma_prev(bi) / (bi.delta * s.sigma_e) + 1.0) +
                       p * (std::log(p / bi.delta) + m * std::log(5.0));
  return std::sqrt(inner);
}

bool n0_condition(const BoundInputs& bi) {
  const double lhs = static_cast<double>(bi.N);
  const double p = bi.hp.p;
  const double m = static_cast<double>(bi.kf.m());
  return lhs >= 2.0 * bi.c_universal * p * m * -log_delta_n(bi.N, bi.hp.p, bi.kf.m());
}

bool n1_condition(const BoundInputs& bi) {
  const double sigma_e = sigma_e_matrix(bi.kf, bi.hp.p).sigma_min;
  return gamma_n(bi) <= std::min(1.0, sigma_e / 4.0);
}

bool n2_condition(const BoundInputs& bi) {
  const auto s = system_norms(bi);
  return 8.0 * std::sqrt(s.rbar / s.sigma_e) * s.toeplitz_p * c_n(bi) / std::sqrt(static_cast<double>(bi.N)) <= 1.0;
}

std::int64_t scan_threshold(const std::function<bool(std::int64_t)>& pred, const ScanOptions& opts) {
  if (pred(1)) return 1;
  std::int64_t lo = 1;  // pred(lo) false
  std::int64_t hi = 2;
  while (!pred(hi)) {
    lo = hi;
    if (hi >= opts.cap) throw Error(ErrorKind::ScanLimit, "no threshold below " + std::to_string(opts.cap));
    hi = std::min(hi * 2, opts.cap);
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (pred(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

Thresholds thresholds(const BoundInputs& bi, const ScanOptions& opts) {
  bi.validate();
  auto at = [&bi](std::int64_t N) {
    BoundInputs b = bi;
    b.N = N;
    return b;
  };
  Thresholds t;
  t.n0 = scan_threshold([&](std::int64_t N) { return n0_condition(at(N)); }, opts);
  t.n1 = scan_threshold([&](std::int64_t N) { return n1_condition(at(N)); }, opts);
  t.n2 = scan_threshold([&](std::int64_t N) { return n2_condition(at(N)); }, opts);
  return t;
}

BoundReport hankel_error_bound(const BoundInputs& bi, bool simplified, const ScanOptions& opts) {
  bi.validate();
  const auto& kf = bi.kf;
  const auto noise = sigma_e_matrix(kf, bi.hp.p);
  const double f = bi.hp.f;
  const double p = bi.hp.p;
  const double m = static_cast<double>(kf.m());
  const double N = static_cast<double>(bi.N);

  BoundReport r;
  r.N = bi.N;
  r.p = bi.hp.p;
  r.f = bi.hp.f;
  r.delta = bi.delta;
  r.c_universal = bi.c_universal;
  r.simplified = simplified;
  r.sigma_e = noise.sigma_min;
  r.sigma_min_R = linalg::sigma_min(kf.base.R);
  r.trace_sigma_e = noise.sigma.trace();
  r.trace_gamma = trace_gamma_prev(bi);
  r.norm_rbar = linalg::spectral_norm(kf.Rbar);
  r.norm_obs_p = linalg::spectral_norm(observability(kf.A(), kf.C(), bi.hp.p));
  r.norm_obs_f = linalg::spectral_norm(observability(kf.A(), kf.C(), bi.hp.f));
  r.norm_toeplitz_f = linalg::spectral_norm(toeplitz(kf.A(), kf.C(), kf.K, bi.hp.f));
  r.norm_closed_loop_pow = linalg::spectral_norm(linalg::matrix_power(kf.closed_loop(), bi.hp.p));
  r.kappa_n = 4.0 / r.sigma_e * (sq(r.norm_obs_p) * r.trace_gamma + r.trace_sigma_e) + bi.delta;
  std::tie(r.c1, r.c2) = constants_c1_c2(kf, bi.hp);
  r.log_delta_n = log_delta_n(bi.N, bi.hp.p, kf.m());
  r.delta_n = std::exp(r.log_delta_n);

  if (simplified) {
    r.cross_term_bound = r.c1 * std::sqrt(f * m * p / N * std::log(5.0 * f * r.kappa_n / bi.delta));
  } else {
    r.cross_term_bound = r.c1 / std::sqrt(N) *
                         std::sqrt(0.5 * f * m * p * std::log(r.kappa_n / bi.delta) +
                                   f * (m * std::log(5.0) + std::log(f / bi.delta)));
  }
  r.truncation_bound = r.c2 * r.norm_closed_loop_pow;
  r.total_bound = r.cross_term_bound + r.truncation_bound;
  r.total_probability_raw = 1.0 - r.delta_n - 6.0 * bi.delta;
  r.total_probability = std::clamp(r.total_probability_raw, 0.0, 1.0);

  auto scan_or_flag = [&opts](const std::function<bool(std::int64_t)>& pred) -> std::int64_t {
    try {
      return scan_threshold(pred, opts);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ScanLimit) return -1;
      throw;
    }
  };
  auto at = [&bi](std::int64_t n) {
    BoundInputs b = bi;
    b.N = n;
    return b;
  };
  r.thresholds.n0 = scan_or_flag([&](std::int64_t n) { return n0_condition(at(n)); });
  r.thresholds.n1 = scan_or_flag([&](std::int64_t n) { return n1_condition(at(n)); });
  r.thresholds.n2 = scan_or_flag([&](std::int64_t n) { return n2_condition(at(n)); });
  return r;
}

double martingale_bound(int r, Eigen::Index m, double delta, const Matrix& v, const Matrix& vbar) {
  if (r < 1 || m < 1) throw Error(ErrorKind::InvalidArgument, "r and m must be positive");
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta must be positive");
  if (v.rows() != v.cols() || vbar.rows() != vbar.cols() || v.rows() != vbar.rows())
    throw Error(ErrorKind::DimensionMismatch, "V and Vbar must be square of the same size");
  const double scale = std::max(1.0, linalg::spectral_norm(vbar));
  if (linalg::min_eig_sym(vbar - v) < -1e-12 * scale) throw Error(ErrorKind::NotDominated, "Vbar - V is not PSD");

  Eigen::LLT<Matrix> lv(linalg::symmetrize(v));
  Eigen::LLT<Matrix> lvbar(linalg::symmetrize(vbar));
  if (lv.info() != Eigen::Success || lvbar.info() != Eigen::Success)
    throw Error(ErrorKind::InvalidArgument, "V and Vbar must be positive definite");
  const double logdet = 2.0 * (lvbar.matrixLLT().diagonal().array().log().sum() -
                               lv.matrixLLT().diagonal().array().log().sum());
  const double rd = r;
  return 8.0 * rd * (std::log(rd / delta) + static_cast<double>(m) * std::log(5.0) + 0.5 * logdet);
}

RealizationBounds realization_error_bounds(double g_norm, double sigma_n_g, double err_g, Eigen::Index n,
                                           double sigma_o) {
  if (n < 1 || !(sigma_n_g > 0.0)) throw Error(ErrorKind::InvalidArgument, "need n >= 1 and sigma_n(G) > 0");
  if (!(sigma_o > 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma_o must be positive");
  if (err_g < 0.0) throw Error(ErrorKind::InvalidArgument, "err_g must be nonnegative");
  if (err_g > sigma_n_g / 4.0)
    throw Error(ErrorKind::RobustnessViolated, "||Ghat - G|| exceeds sigma_n(G)/4");
  RealizationBounds b;
  b.obs = 2.0 * std::sqrt(10.0 * static_cast<double>(n) / sigma_n_g) * err_g;
  b.c = b.obs;
  b.k = b.obs;
  b.a = (std::sqrt(g_norm) + sigma_o) / (sigma_o * sigma_o) * b.obs;
  return b;
}

void to_json(nlohmann::json& j, const BoundReport& r) {
  j = {{"N", r.N},
       {"p", r.p},
       {"f", r.f},
       {"delta", r.delta},
       {"c_universal", r.c_universal},
       {"simplified", r.simplified},
       {"sigma_e", r.sigma_e},
       {"sigma_min_R", r.sigma_min_R},
       {"log_delta_n", r.log_delta_n},
       {"delta_n", r.delta_n},
       {"kappa_n", r.kappa_n},
       {"c1", r.c1},
       {"c2", r.c2},
       {"norm_rbar", r.norm_rbar},
       {"norm_obs_p", r.norm_obs_p},
       {"norm_obs_f", r.norm_obs_f},
       {"norm_toeplitz_f", r.norm_toeplitz_f},
       {"norm_closed_loop_pow_p", r.norm_closed_loop_pow},
       {"trace_gamma", r.trace_gamma},
       {"trace_sigma_e", r.trace_sigma_e},
       {"n0", r.thresholds.n0},
       {"n1", r.thresholds.n1},
       {"n2", r.thresholds.n2},
       {"cross_term_bound", r.cross_term_bound},
       {"truncation_bound", r.truncation_bound},
       {"total_bound", r.total_bound},
       {"total_probability", r.total_probability},
       {"total_probability_raw", r.total_probability_raw}};
}

}  // namespace ssid

#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include <nlohmann/json.hpp>

#include "ssid/structmats.hpp"

namespace ssid {

struct BoundInputs {
  SteadyKalman kf;
  HankelParams hp;
  std::int64_t N = 1;
  double delta = 0.1;
  /// The unnamed universal constant of the noise persistence-of-excitation lemma.
  double c_universal = 1.0;

  void validate() const;
};

struct Thresholds {
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;
};

/// Every intermediate of the regression-error envelope, named so reports can be audited.
struct BoundReport {
  std::int64_t N = 0;
  int p = 0;
  int f = 0;
  double delta = 0.0;
  double c_universal = 1.0;
  bool simplified = false;

  double sigma_e = 0.0;
  double sigma_min_R = 0.0;
  double log_delta_n = 0.0;
  double delta_n = 0.0;
  double kappa_n = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double norm_rbar = 0.0;
  double norm_obs_p = 0.0;
  double norm_obs_f = 0.0;
  double norm_toeplitz_f = 0.0;
  double norm_closed_loop_pow = 0.0;  // ‖(A−KC)^p‖₂
  double trace_gamma = 0.0;           // Tr Γ_{N−1}
  double trace_sigma_e = 0.0;         // Tr Σ_E
  Thresholds thresholds;
  double cross_term_bound = 0.0;
  double truncation_bound = 0.0;
  double total_bound = 0.0;
  double total_probability = 0.0;      // clamped to [0, 1]
  double total_probability_raw = 0.0;  // 1 − δ_N − 6δ, unclamped
};

struct ScanOptions {
  std::int64_t cap = 1'000'000'000'000LL;
};

/// Γ_k = AΓ_{k−1}Aᵀ + K Rbar Kᵀ with Γ₀ = 0, evaluated by doubling in O(log k) products.
Matrix state_covariance(const SteadyKalman& kf, std::int64_t k);

struct PastNoiseCovariance {
  Matrix sigma;        // Σ_E = 𝒯_p diag(Rbar) 𝒯_pᵀ
  double sigma_min;    // σ_E
};
PastNoiseCovariance sigma_e_matrix(const SteadyKalman& kf, int p);

/// Natural log of δ_N = (2(N+p−1)m)^(−log²(2pm)·log(2(N+p−1)m)).
double log_delta_n(std::int64_t N, int p, Eigen::Index m);
double delta_n(std::int64_t N, int p, Eigen::Index m);

double kappa_n(const BoundInputs& bi);

/// (C₁, C₂)
std::pair<double, double> constants_c1_c2(const SteadyKalman& kf, const HankelParams& hp);

/// Cross-term constant of the output persistence-of-excitation argument.
double c_xe(const BoundInputs& bi);
/// γ_N = 2‖𝒯_p‖₂·sqrt(C_XE·‖Rbar‖₂/N)
double gamma_n(const BoundInputs& bi);
/// C_N of the truncation cross-term.
double c_n(const BoundInputs& bi);

bool n0_condition(const BoundInputs& bi);
bool n1_condition(const BoundInputs& bi);
bool n2_condition(const BoundInputs& bi);

/// Smallest N ≥ 1 with pred(N) true, assuming pred is eventually monotone: doubling to
/// bracket, then bisection. Throws ScanLimit past opts.cap.
std::int64_t scan_threshold(const std::function<bool(std::int64_t)>& pred, const ScanOptions& opts = {});

Thresholds thresholds(const BoundInputs& bi, const ScanOptions& opts = {});

BoundReport hankel_error_bound(const BoundInputs& bi, bool simplified, const ScanOptions& opts = {});

/// Squared-norm envelope 8r(log(r5^m/δ) + ½ logdet(V̄V⁻¹)) of a self-normalized vector martingale.
double martingale_bound(int r, Eigen::Index m, double delta, const Matrix& v, const Matrix& vbar);

struct RealizationBounds {
  double obs = 0.0;
  double c = 0.0;
  double a = 0.0;
  double k = 0.0;
};

/// Envelopes on the aligned errors of 𝒪_f, C, A, K given ‖Ĝ−G‖₂ ≤ σ_n(G)/4.
RealizationBounds realization_error_bounds(double g_norm, double sigma_n_g, double err_g, Eigen::Index n,
                                           double sigma_o);

void to_json(nlohmann::json& j, const BoundReport& r);

}  // namespace ssid

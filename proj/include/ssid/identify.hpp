#pragma once

#include <utility>

#include <nlohmann/json.hpp>

#include "ssid/structmats.hpp"

namespace ssid {

struct HankelEstimate {
  Matrix ghat;             // mf x mp
  double gram_min_eig = 0; // λ_min(Y₋Y₋ᵀ), unridged
  Vector singular_values;  // of ghat, descending
};

struct Realization {
  Matrix ahat;    // n x n
  Matrix chat;    // m x n
  Matrix khat;    // n x m
  Matrix obs_f;   // mf x n
  Matrix ctrl_p;  // n x mp
  Vector sigma1;  // top-n singular values
  double sigma_np1 = 0.0;
  bool rank_gap_warning = false;
};

struct RegressOptions {
  double ridge = 0.0;
  /// PersistenceFailure when λ_min(Y₋Y₋ᵀ) < persistence_floor · N and ridge is 0.
  double persistence_floor = 1e-10;
};

struct RealizationOptions {
  /// Warn when σ_n − σ_{n+1} < gap_floor · σ_1.
  double gap_floor = 1e-9;
  double pinv_cutoff = 1e-10;
};

/// Ĝ = Y₊Y₋ᵀ(Y₋Y₋ᵀ + ridge·I)⁻¹. With ridge 0 the solve goes through a QR factorization
/// of Y₋ᵀ rather than the Gram matrix.
HankelEstimate regress_hankel(const DataMatrices& dm, const RegressOptions& opts = {});

/// Wraps an exact or externally supplied Ĝ (gram_min_eig left at 0).
HankelEstimate hankel_estimate_from(const Matrix& g);

/// Thin SVD with each left singular vector scaled so its largest-magnitude entry is
/// positive (first index wins ties); the matching right vector flips with it.
struct SignedSvd {
  Matrix U;
  Vector S;
  Matrix V;
};
SignedSvd signed_svd(const Matrix& m);

/// Balanced factorization of the rank-n truncation of Ĝ followed by C/K read-off and a
/// least-squares shift solve for A.
Realization balanced_realization(const HankelEstimate& he, Eigen::Index n, Eigen::Index m, int f, int p,
                                 const RealizationOptions& opts = {});

/// build_data_matrices → regress_hankel → balanced_realization.
std::pair<HankelEstimate, Realization> identify(const Trajectory& traj, const HankelParams& hp, Eigen::Index n,
                                                const RegressOptions& ropts = {},
                                                const RealizationOptions& bopts = {});

/// C Â^i K̂ for i = 0..count-1, stacked vertically.
Matrix markov_parameters(const Matrix& A, const Matrix& C, const Matrix& K, int count);

void to_json(nlohmann::json& j, const Realization& r);
void to_json(nlohmann::json& j, const HankelEstimate& he);

}  // namespace ssid

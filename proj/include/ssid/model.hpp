#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "ssid/linalg.hpp"

namespace ssid {

/// Output-only state space model
///   x_{k+1} = A x_k + w_k,  y_k = C x_k + v_k,  w ~ N(0, Q), v ~ N(0, R).
struct StateSpace {
  Matrix A;
  Matrix C;
  Matrix Q;
  Matrix R;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return C.rows(); }

  /// Checks dimensions, Q ⪰ 0 and R ≻ 0. Throws InvalidModel.
  void validate() const;

  static StateSpace make(Matrix A, Matrix C, Matrix Q, Matrix R);
};

/// Innovation form x̂_{k+1} = A x̂_k + K e_k, y_k = C x̂_k + e_k with e ~ N(0, Rbar).
struct SteadyKalman {
  StateSpace base;
  Matrix K;
  Matrix P;
  Matrix Rbar;
  int iterations = 0;
  double residual = 0.0;

  const Matrix& A() const { return base.A; }
  const Matrix& C() const { return base.C; }
  Eigen::Index n() const { return base.n(); }
  Eigen::Index m() const { return base.m(); }
  /// A − K·C
  Matrix closed_loop() const { return base.A - K * base.C; }
};

struct AssumptionReport {
  bool observable = false;
  bool q_controllable = false;
  bool k_controllable = false;
  double spectral_radius = 0.0;
  bool r_pos_def = false;
  bool marginally_stable = false;
};

struct DareOptions {
  double tol = 1e-12;
  int max_iter = 100000;
  /// Consecutive residual increases (with P blowing up) that count as divergence.
  int divergence_window = 200;
};

/// One application of the Riccati map P ↦ APAᵀ + Q − APCᵀ(CPCᵀ+R)⁻¹CPAᵀ.
Matrix riccati_map(const StateSpace& ss, const Matrix& P);

/// Steady-state Kalman filter by fixed-point iteration from P₀ = Q.
/// Convergence is declared when ‖P_{i+1} − P_i‖₂ ≤ tol·max(1, ‖P_i‖₂).
SteadyKalman solve_dare(const StateSpace& ss, const DareOptions& opts = {});

AssumptionReport check_assumptions(const SteadyKalman& kf, double tol = 1e-9);

double spectral_radius(const Matrix& m);

void to_json(nlohmann::json& j, const StateSpace& ss);
void from_json(const nlohmann::json& j, StateSpace& ss);
void to_json(nlohmann::json& j, const SteadyKalman& kf);
void to_json(nlohmann::json& j, const AssumptionReport& r);

/// Row-major nested arrays. Flat arrays are accepted when rows/cols are known.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols);

}  // namespace ssid

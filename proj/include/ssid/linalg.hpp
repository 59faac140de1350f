#pragma once

#include <Eigen/Dense>

namespace ssid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Small dense helpers shared by every module. All norms are spectral unless named otherwise.
namespace linalg {

double spectral_norm(const Matrix& m);
/// Smallest singular value; 0 for an empty matrix.
double sigma_min(const Matrix& m);
/// k-th largest singular value (1-based); 0 if k exceeds min(rows, cols).
double sigma_k(const Matrix& m, Eigen::Index k);
Vector singular_values(const Matrix& m);

Matrix symmetrize(const Matrix& m);
double min_eig_sym(const Matrix& m);
double max_eig_sym(const Matrix& m);

/// Lower factor L with L·Lᵀ = m. Falls back to a symmetric square root when m is only
/// semidefinite; throws CholeskyFailure when m is indefinite beyond rounding.
Matrix psd_factor(const Matrix& m);
/// Symmetric square root of a PSD matrix.
Matrix sqrt_psd(const Matrix& m);

/// Moore-Penrose pseudo-inverse with singular values below rel_cutoff·σ_max dropped.
Matrix pinv(const Matrix& m, double rel_cutoff = 1e-10);

/// Numerical rank with singular values above rel_tol·σ_max counted.
Eigen::Index rank(const Matrix& m, double rel_tol);

Matrix matrix_power(const Matrix& m, int k);

}  // namespace linalg
}  // namespace ssid

#pragma once

// Test-only helpers: seeded random systems and brute-force oracles that do not route
// through the library's own constructions.

#include <cmath>
#include <cstdint>

#include "ssid/model.hpp"
#include "ssid/rng.hpp"

namespace ssid::testing {

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

inline StateSpace scalar_system(double a = 0.9) {
  return StateSpace::make(scalar(a), scalar(1.0), scalar(1.0), scalar(1.0));
}

/// Random stable system with spectral radius of A drawn in [0.3, rho_max].
inline StateSpace random_system(std::uint64_t seed, Eigen::Index n, Eigen::Index m, double rho_max = 0.95) {
  Gaussian g(seed);
  std::uniform_real_distribution<double> u(0.3, rho_max);
  Matrix A = g.matrix(n, n);
  Eigen::EigenSolver<Matrix> es(A, false);
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  A *= u(g.engine()) / rho;
  const Matrix C = g.matrix(m, n);
  const Matrix B = g.matrix(n, n);
  const Matrix D = g.matrix(m, m);
  const Matrix Q = B * B.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n);
  const Matrix R = D * D.transpose() / static_cast<double>(m) + 0.5 * Matrix::Identity(m, m);
  return StateSpace::make(A, C, Q, R);
}

inline Matrix random_orthonormal(Gaussian& g, Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(g.matrix(n, n));
  return qr.householderQ() * Matrix::Identity(n, n);
}

/// A^k by repeated multiplication.
inline Matrix naive_power(const Matrix& A, int k) {
  Matrix out = Matrix::Identity(A.rows(), A.cols());
  for (int i = 0; i < k; ++i) out = out * A;
  return out;
}

inline double spec(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace ssid::testing

#include "ssid/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "ssid/error.hpp"

namespace ssid {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NotDetectable: return "NotDetectable";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::CholeskyFailure: return "CholeskyFailure";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::PersistenceFailure: return "PersistenceFailure";
    case ErrorKind::PinvFailure: return "PinvFailure";
    case ErrorKind::SvdFailure: return "SvdFailure";
    case ErrorKind::NotDominated: return "NotDominated";
    case ErrorKind::RobustnessViolated: return "RobustnessViolated";
    case ErrorKind::ScanLimit: return "ScanLimit";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MissingDiagnostics: return "MissingDiagnostics";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace linalg {

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

double sigma_min(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Vector s = singular_values(m);
  return s(s.size() - 1);
}

double sigma_k(const Matrix& m, Eigen::Index k) {
  const Vector s = singular_values(m);
  if (k < 1 || k > s.size()) return 0.0;
  return s(k - 1);
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eig_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "symmetric eigensolver");
  return es.eigenvalues()(0);
}

double max_eig_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "symmetric eigensolver");
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

Matrix sqrt_psd(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "symmetric eigensolver");
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev(0) < -1e-12 * scale) throw Error(ErrorKind::CholeskyFailure, "matrix is indefinite");
  const Vector root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix psd_factor(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "factor of non-square matrix");
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() == Eigen::Success) return llt.matrixL();
  return sqrt_psd(m);
}

Matrix pinv(const Matrix& m, double rel_cutoff) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  if (s.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  const double cut = rel_cutoff * s(0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::Index rank(const Matrix& m, double rel_tol) {
  const Vector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

Matrix matrix_power(const Matrix& m, int k) {
  Matrix result = Matrix::Identity(m.rows(), m.cols());
  Matrix base = m;
  while (k > 0) {
    if (k & 1) result = result * base;
    base = base * base;
    k >>= 1;
  }
  return result;
}

}  // namespace linalg
}  // namespace ssid

#include "ssid/model.hpp"

#include <cmath>
#include <string>

#include "ssid/error.hpp"
#include "ssid/structmats.hpp"

namespace ssid {

namespace {

constexpr double kStabilityTol = 1e-7;

bool is_symmetric(const Matrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void StateSpace::validate() const {
  const auto nn = n();
  const auto mm = m();
  if (nn < 1 || mm < 1) throw Error(ErrorKind::InvalidModel, "n and m must be positive");
  if (A.cols() != nn) throw Error(ErrorKind::InvalidModel, "A must be square, got " + dims(A));
  if (C.cols() != nn) throw Error(ErrorKind::InvalidModel, "C must be m x n, got " + dims(C));
  if (Q.rows() != nn || Q.cols() != nn) throw Error(ErrorKind::InvalidModel, "Q must be n x n, got " + dims(Q));
  if (R.rows() != mm || R.cols() != mm) throw Error(ErrorKind::InvalidModel, "R must be m x m, got " + dims(R));
  if (!A.allFinite() || !C.allFinite() || !Q.allFinite() || !R.allFinite())
    throw Error(ErrorKind::InvalidModel, "non-finite entries");
  if (!is_symmetric(Q)) throw Error(ErrorKind::InvalidModel, "Q not symmetric");
  if (!is_symmetric(R)) throw Error(ErrorKind::InvalidModel, "R not symmetric");
  const double qscale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if (linalg::min_eig_sym(Q) < -1e-12 * qscale) throw Error(ErrorKind::InvalidModel, "Q not positive semidefinite");
  if (linalg::min_eig_sym(R) <= 0.0) throw Error(ErrorKind::InvalidModel, "R not positive definite");
}

StateSpace StateSpace::make(Matrix A, Matrix C, Matrix Q, Matrix R) {
  StateSpace ss{std::move(A), std::move(C), std::move(Q), std::move(R)};
  ss.validate();
  return ss;
}

Matrix riccati_map(const StateSpace& ss, const Matrix& P) {
  const Matrix& A = ss.A;
  const Matrix& C = ss.C;
  const Matrix S = C * P * C.transpose() + ss.R;
  const Matrix APCt = A * P * C.transpose();
  const Matrix gain = S.llt().solve(APCt.transpose()).transpose();
  return A * P * A.transpose() + ss.Q - gain * APCt.transpose();
}

SteadyKalman solve_dare(const StateSpace& ss, const DareOptions& opts) {
  ss.validate();
  if (opts.tol <= 0.0 || opts.max_iter < 1) throw Error(ErrorKind::InvalidArgument, "tol and max_iter must be positive");

  Matrix P = linalg::symmetrize(ss.Q);
  double last = std::numeric_limits<double>::infinity();
  int rising = 0;
  int iter = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (; iter < opts.max_iter; ++iter) {
    Matrix next = linalg::symmetrize(riccati_map(ss, P));
    if (!next.allFinite()) throw Error(ErrorKind::NotDetectable, "Riccati iterate became non-finite");
    residual = linalg::spectral_norm(next - P);
    const double scale = std::max(1.0, linalg::spectral_norm(P));
    P = std::move(next);
    if (residual <= opts.tol * scale) break;
    rising = residual > last ? rising + 1 : 0;
    last = residual;
    if (rising >= opts.divergence_window && linalg::spectral_norm(P) > 1e12)
      throw Error(ErrorKind::NotDetectable, "Riccati iteration diverges");
  }
  if (iter == opts.max_iter)
    throw Error(ErrorKind::NonConvergence, "residual " + std::to_string(residual) + " after " +
                                               std::to_string(opts.max_iter) + " iterations");

  SteadyKalman kf;
  kf.base = ss;
  kf.P = P;
  kf.Rbar = linalg::symmetrize(ss.C * P * ss.C.transpose() + ss.R);
  kf.K = kf.Rbar.llt().solve((ss.A * P * ss.C.transpose()).transpose()).transpose();
  kf.iterations = iter + 1;
  kf.residual = linalg::spectral_norm(riccati_map(ss, P) - P);

  if (linalg::min_eig_sym(P) <= 0.0)
    throw Error(ErrorKind::InvalidModel, "Riccati solution is not positive definite (is (A, Q^1/2) controllable?)");
  if (spectral_radius(kf.closed_loop()) >= 1.0)
    throw Error(ErrorKind::NotDetectable, "A - KC is not strictly stable");
  return kf;
}

double spectral_radius(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "spectral radius of non-square matrix");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::EigenFailure, "eigensolver did not converge");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

AssumptionReport check_assumptions(const SteadyKalman& kf, double tol) {
  const auto n = kf.n();
  AssumptionReport r;
  r.observable = linalg::rank(observability(kf.A(), kf.C(), static_cast<int>(n)), tol) == n;

  const Matrix qroot = linalg::sqrt_psd(kf.base.Q);
  Matrix ctrb(n, n * n);
  Matrix block = qroot;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * n, n) = block;
    block = kf.A() * block;
  }
  r.q_controllable = linalg::rank(ctrb, tol) == n;
  r.k_controllable = linalg::rank(controllability_rev(kf.A(), kf.K, kf.C(), static_cast<int>(n)), tol) == n;
  r.spectral_radius = spectral_radius(kf.A());
  Eigen::LLT<Matrix> llt(kf.base.R);
  r.r_pos_def = llt.info() == Eigen::Success;
  r.marginally_stable = r.spectral_radius <= 1.0 + kStabilityTol;
  return r;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  if (j.is_number()) {
    if (rows != 1 || cols != 1) throw Error(ErrorKind::ConfigError, "scalar given for a non-scalar matrix");
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array()) throw Error(ErrorKind::ConfigError, "matrix must be an array");
  if (!j.empty() && j.front().is_array()) {
    if (static_cast<Eigen::Index>(j.size()) != rows) throw Error(ErrorKind::ConfigError, "wrong number of matrix rows");
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& row = j[i];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
        throw Error(ErrorKind::ConfigError, "wrong number of matrix columns");
      for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[c].get<double>();
    }
    return m;
  }
  if (static_cast<Eigen::Index>(j.size()) != rows * cols) throw Error(ErrorKind::ConfigError, "flat matrix has wrong length");
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i * cols + c].get<double>();
  return m;
}

void to_json(nlohmann::json& j, const StateSpace& ss) {
  j = {{"n", ss.n()}, {"m", ss.m()},
       {"A", matrix_to_json(ss.A)}, {"C", matrix_to_json(ss.C)},
       {"Q", matrix_to_json(ss.Q)}, {"R", matrix_to_json(ss.R)}};
}

void from_json(const nlohmann::json& j, StateSpace& ss) {
  try {
    // n and m may be omitted when A and C are nested arrays or scalars
    auto rows_of = [](const nlohmann::json& v) -> Eigen::Index {
      if (v.is_number()) return 1;
      if (v.is_array() && !v.empty() && v.front().is_array()) return static_cast<Eigen::Index>(v.size());
      throw Error(ErrorKind::ConfigError, "n and m are required for flat matrices");
    };
    const auto n = j.contains("n") ? j.at("n").get<Eigen::Index>() : rows_of(j.at("A"));
    const auto m = j.contains("m") ? j.at("m").get<Eigen::Index>() : rows_of(j.at("C"));
    if (n < 1 || m < 1) throw Error(ErrorKind::ConfigError, "n and m must be positive");
    ss.A = matrix_from_json(j.at("A"), n, n);
    ss.C = matrix_from_json(j.at("C"), m, n);
    ss.Q = matrix_from_json(j.at("Q"), n, n);
    ss.R = matrix_from_json(j.at("R"), m, m);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("system: ") + e.what());
  }
  ss.validate();
}

void to_json(nlohmann::json& j, const SteadyKalman& kf) {
  j = {{"system", kf.base},
       {"K", matrix_to_json(kf.K)},
       {"P", matrix_to_json(kf.P)},
       {"Rbar", matrix_to_json(kf.Rbar)},
       {"iterations", kf.iterations},
       {"riccati_residual", kf.residual},
       {"closed_loop_spectral_radius", spectral_radius(kf.closed_loop())}};
}

void to_json(nlohmann::json& j, const AssumptionReport& r) {
  j = {{"observable", r.observable},           {"q_controllable", r.q_controllable},
       {"k_controllable", r.k_controllable},   {"spectral_radius", r.spectral_radius},
       {"r_pos_def", r.r_pos_def},             {"marginally_stable", r.marginally_stable}};
}

}  // namespace ssid

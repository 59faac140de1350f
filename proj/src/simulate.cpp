#include "ssid/simulate.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssid/error.hpp"
#include "ssid/rng.hpp"

namespace ssid {

namespace {

Matrix cholesky_or_throw(const Matrix& m, const char* what) {
  try {
    return linalg::psd_factor(m);
  } catch (const Error&) {
    throw Error(ErrorKind::CholeskyFailure, std::string(what) + " is numerically indefinite");
  }
}

}  // namespace

Trajectory simulate_innovation(const SteadyKalman& kf, const SimConfig& cfg) {
  if (cfg.nbar < 1) throw Error(ErrorKind::InvalidArgument, "nbar must be positive");
  Eigen::LLT<Matrix> llt(kf.Rbar);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::CholeskyFailure, "Rbar is numerically indefinite");
  const Matrix L = llt.matrixL();

  const auto n = kf.n();
  const auto m = kf.m();
  Gaussian rng(cfg.seed);
  Trajectory t;
  t.seed = cfg.seed;
  t.y.resize(m, cfg.nbar);
  t.e.resize(m, cfg.nbar);
  t.xhat.resize(n, cfg.nbar + 1);
  t.xhat.col(0).setZero();
  for (Eigen::Index k = 0; k < cfg.nbar; ++k) {
    t.e.col(k) = L * rng.vector(m);
    t.y.col(k) = kf.C() * t.xhat.col(k) + t.e.col(k);
    t.xhat.col(k + 1) = kf.A() * t.xhat.col(k) + kf.K * t.e.col(k);
  }
  return t;
}

void reconstruct_innovations(const SteadyKalman& kf, Trajectory& t) {
  const auto nbar = t.y.cols();
  t.e.resize(kf.m(), nbar);
  t.xhat.resize(kf.n(), nbar + 1);
  t.xhat.col(0).setZero();
  for (Eigen::Index k = 0; k < nbar; ++k) {
    t.e.col(k) = t.y.col(k) - kf.C() * t.xhat.col(k);
    t.xhat.col(k + 1) = kf.A() * t.xhat.col(k) + kf.K * t.e.col(k);
  }
}

Trajectory simulate_statespace(const StateSpace& ss, const SteadyKalman& kf, const SimConfig& cfg) {
  if (cfg.nbar < 1) throw Error(ErrorKind::InvalidArgument, "nbar must be positive");
  const Matrix Lq = cholesky_or_throw(ss.Q, "Q");
  const Matrix Lr = cholesky_or_throw(ss.R, "R");
  const Matrix Lp = cholesky_or_throw(kf.P, "P");

  const auto n = ss.n();
  const auto m = ss.m();
  Gaussian rng(cfg.seed);
  Trajectory t;
  t.seed = cfg.seed;
  t.y.resize(m, cfg.nbar);
  Vector x = Lp * rng.vector(n);
  for (Eigen::Index k = 0; k < cfg.nbar; ++k) {
    t.y.col(k) = ss.C * x + Lr * rng.vector(m);
    x = ss.A * x + Lq * rng.vector(n);
  }
  reconstruct_innovations(kf, t);
  return t;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  os << "k";
  for (Eigen::Index i = 0; i < t.y.rows(); ++i) os << ",y_" << (i + 1);
  os << '\n' << std::setprecision(17);
  for (Eigen::Index k = 0; k < t.y.cols(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < t.y.rows(); ++i) os << ',' << t.y(i, k);
    os << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::IoError, "empty trajectory CSV");
  Eigen::Index m = 0;
  for (char c : line) m += (c == ',');
  if (m < 1 || line.rfind("k,", 0) != 0) throw Error(ErrorKind::IoError, "trajectory CSV header must be k,y_1,...");

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col > 0) {
        try {
          values.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw Error(ErrorKind::IoError, "bad number '" + cell + "' on data row " + std::to_string(rows));
        }
      }
      ++col;
    }
    if (col != m + 1) throw Error(ErrorKind::IoError, "wrong column count on data row " + std::to_string(rows));
    ++rows;
  }
  Trajectory t;
  t.y = Eigen::Map<const Matrix>(values.data(), m, rows);
  return t;
}

}  // namespace ssid

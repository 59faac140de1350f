#include "ssid/structmats.hpp"

#include <string>
#include <vector>

#include "ssid/error.hpp"

namespace ssid {

void check_horizons(const HankelParams& hp, Eigen::Index n) {
  if (hp.p < n + 1 || hp.f < n + 1)
    throw Error(ErrorKind::InvalidArgument, "horizons must satisfy p, f >= n + 1 (p=" + std::to_string(hp.p) +
                                                ", f=" + std::to_string(hp.f) + ", n=" + std::to_string(n) + ")");
}

Matrix observability(const Matrix& A, const Matrix& C, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "observability horizon must be positive");
  const auto m = C.rows();
  Matrix O(m * k, A.cols());
  Matrix block = C;
  for (int i = 0; i < k; ++i) {
    O.middleRows(i * m, m) = block;
    block = block * A;
  }
  return O;
}

Matrix controllability_rev(const Matrix& A, const Matrix& K, const Matrix& C, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "controllability horizon must be positive");
  const auto m = K.cols();
  const Matrix F = A - K * C;
  Matrix ctrl(A.rows(), m * k);
  Matrix block = K;
  for (int j = 0; j < k; ++j) {
    ctrl.middleCols((k - 1 - j) * m, m) = block;
    block = F * block;
  }
  return ctrl;
}

Matrix toeplitz(const Matrix& A, const Matrix& C, const Matrix& K, int s) {
  if (s < 1) throw Error(ErrorKind::InvalidArgument, "Toeplitz size must be positive");
  const auto m = C.rows();
  Matrix T = Matrix::Zero(m * s, m * s);
  // markov[d] = C A^{d-1} K for d >= 1
  std::vector<Matrix> markov(static_cast<size_t>(s));
  Matrix AK = K;
  for (int d = 1; d < s; ++d) {
    markov[static_cast<size_t>(d)] = C * AK;
    AK = A * AK;
  }
  for (int i = 0; i < s; ++i) {
    T.block(i * m, i * m, m, m).setIdentity();
    for (int j = 0; j < i; ++j) T.block(i * m, j * m, m, m) = markov[static_cast<size_t>(i - j)];
  }
  return T;
}

Matrix hankel_true(const SteadyKalman& kf, const HankelParams& hp) {
  return observability(kf.A(), kf.C(), hp.f) * controllability_rev(kf.A(), kf.K, kf.C(), hp.p);
}

namespace {

Matrix stack_windows(const Matrix& series, Eigen::Index offset, int depth, Eigen::Index N) {
  const auto m = series.rows();
  Matrix out(m * depth, N);
  for (Eigen::Index k = 0; k < N; ++k)
    for (int i = 0; i < depth; ++i) out.block(i * m, k, m, 1) = series.col(offset + k + i);
  return out;
}

}  // namespace

DataMatrices build_data_matrices(const Trajectory& traj, const HankelParams& hp) {
  if (hp.p < 1 || hp.f < 1) throw Error(ErrorKind::InvalidArgument, "horizons must be positive");
  const auto nbar = traj.length();
  if (nbar < hp.p + hp.f)
    throw Error(ErrorKind::InsufficientSamples, "trajectory of length " + std::to_string(nbar) +
                                                    " is shorter than p + f = " + std::to_string(hp.p + hp.f));
  DataMatrices dm;
  dm.N = nbar - hp.p - hp.f + 1;
  dm.yminus = stack_windows(traj.y, 0, hp.p, dm.N);
  dm.yplus = stack_windows(traj.y, hp.p, hp.f, dm.N);
  if (traj.has_diagnostics()) {
    dm.eminus = stack_windows(traj.e, 0, hp.p, dm.N);
    dm.eplus = stack_windows(traj.e, hp.p, hp.f, dm.N);
    dm.xhat_block = traj.xhat.middleCols(0, dm.N);
    dm.xhat_plus = traj.xhat.middleCols(hp.p, dm.N);
  }
  return dm;
}

}  // namespace ssid

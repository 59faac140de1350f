#include "ssid/identify.hpp"

#include <cmath>
#include <string>

#include "ssid/error.hpp"

namespace ssid {

HankelEstimate regress_hankel(const DataMatrices& dm, const RegressOptions& opts) {
  if (opts.ridge < 0.0) throw Error(ErrorKind::InvalidArgument, "ridge must be nonnegative");
  const auto mp = dm.yminus.rows();
  const auto N = dm.N;
  if (N < 1 || dm.yminus.cols() != N || dm.yplus.cols() != N)
    throw Error(ErrorKind::DimensionMismatch, "data matrices are inconsistent");

  HankelEstimate he;
  // λ_min(Y₋Y₋ᵀ) from the triangular factor of Y₋ᵀ: squaring singular values of R is far
  // better conditioned than an eigen-decomposition of the Gram matrix itself.
  Eigen::ColPivHouseholderQR<Matrix> qr(dm.yminus.transpose());
  if (N >= mp) {
    const Matrix R = qr.matrixR().topRows(mp).triangularView<Eigen::Upper>();
    const double smin = linalg::sigma_min(R);
    he.gram_min_eig = smin * smin;
  } else {
    he.gram_min_eig = 0.0;
  }

  if (opts.ridge == 0.0) {
    if (N < mp || he.gram_min_eig < opts.persistence_floor * static_cast<double>(N))
      throw Error(ErrorKind::PersistenceFailure,
                  "past-output Gram matrix is singular (lambda_min=" + std::to_string(he.gram_min_eig) +
                      ", N=" + std::to_string(N) + ", mp=" + std::to_string(mp) + ")");
    he.ghat = qr.solve(dm.yplus.transpose()).transpose();
  } else {
    Matrix gram = dm.yminus * dm.yminus.transpose();
    gram.diagonal().array() += opts.ridge;
    const Matrix cross = dm.yplus * dm.yminus.transpose();
    he.ghat = gram.ldlt().solve(cross.transpose()).transpose();
  }
  he.singular_values = linalg::singular_values(he.ghat);
  return he;
}

HankelEstimate hankel_estimate_from(const Matrix& g) {
  HankelEstimate he;
  he.ghat = g;
  he.singular_values = linalg::singular_values(g);
  return he;
}

SignedSvd signed_svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SignedSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index c = 0; c < out.U.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index r = 0; r < out.U.rows(); ++r) {
      const double a = std::abs(out.U(r, c));
      if (a > best) {
        best = a;
        arg = r;
      }
    }
    if (out.U(arg, c) < 0.0) {
      out.U.col(c) *= -1.0;
      out.V.col(c) *= -1.0;
    }
  }
  return out;
}

Realization balanced_realization(const HankelEstimate& he, Eigen::Index n, Eigen::Index m, int f, int p,
                                 const RealizationOptions& opts) {
  const Matrix& g = he.ghat;
  if (n < 1 || m < 1 || f < 1 || p < 1) throw Error(ErrorKind::InvalidArgument, "n, m, f, p must be positive");
  if (g.rows() != m * f || g.cols() != m * p)
    throw Error(ErrorKind::DimensionMismatch, "Hankel estimate is not mf x mp");
  if (std::min(m * f, m * p) < n) throw Error(ErrorKind::InvalidArgument, "min(mf, mp) must be at least n");
  if (m * (f - 1) < n) throw Error(ErrorKind::InvalidArgument, "m(f-1) must be at least n");
  if (!g.allFinite()) throw Error(ErrorKind::SvdFailure, "Hankel estimate has non-finite entries");

  const SignedSvd svd = signed_svd(g);
  Realization r;
  r.sigma1 = svd.S.head(n);
  r.sigma_np1 = svd.S.size() > n ? svd.S(n) : 0.0;
  r.rank_gap_warning = (r.sigma1(n - 1) - r.sigma_np1) < opts.gap_floor * svd.S(0);

  const Vector root = r.sigma1.cwiseSqrt();
  r.obs_f = svd.U.leftCols(n) * root.asDiagonal();
  r.ctrl_p = root.asDiagonal() * svd.V.leftCols(n).transpose();
  r.chat = r.obs_f.topRows(m);
  r.khat = r.ctrl_p.rightCols(m);

  const Matrix upper = r.obs_f.topRows(m * (f - 1));
  const Matrix lower = r.obs_f.bottomRows(m * (f - 1));
  const Vector su = linalg::singular_values(upper);
  if (su.size() < n || su(0) == 0.0 || su(n - 1) <= opts.pinv_cutoff * su(0))
    throw Error(ErrorKind::PinvFailure, "shifted observability factor is rank deficient");
  r.ahat = linalg::pinv(upper, opts.pinv_cutoff) * lower;
  return r;
}

std::pair<HankelEstimate, Realization> identify(const Trajectory& traj, const HankelParams& hp, Eigen::Index n,
                                                const RegressOptions& ropts, const RealizationOptions& bopts) {
  const DataMatrices dm = build_data_matrices(traj, hp);
  HankelEstimate he = regress_hankel(dm, ropts);
  Realization r = balanced_realization(he, n, traj.y.rows(), hp.f, hp.p, bopts);
  return {std::move(he), std::move(r)};
}

Matrix markov_parameters(const Matrix& A, const Matrix& C, const Matrix& K, int count) {
  const auto m = C.rows();
  Matrix out(m * count, K.cols());
  Matrix AK = K;
  for (int i = 0; i < count; ++i) {
    out.middleRows(i * m, m) = C * AK;
    AK = A * AK;
  }
  return out;
}

void to_json(nlohmann::json& j, const Realization& r) {
  j = {{"A", matrix_to_json(r.ahat)},
       {"C", matrix_to_json(r.chat)},
       {"K", matrix_to_json(r.khat)},
       {"obs_f", matrix_to_json(r.obs_f)},
       {"ctrl_p", matrix_to_json(r.ctrl_p)},
       {"sigma1", std::vector<double>(r.sigma1.data(), r.sigma1.data() + r.sigma1.size())},
       {"sigma_np1", r.sigma_np1},
       {"rank_gap_warning", r.rank_gap_warning}};
}

void to_json(nlohmann::json& j, const HankelEstimate& he) {
  j = {{"ghat", matrix_to_json(he.ghat)},
       {"gram_min_eig", he.gram_min_eig},
       {"singular_values",
        std::vector<double>(he.singular_values.data(), he.singular_values.data() + he.singular_values.size())}};
}

}  // namespace ssid

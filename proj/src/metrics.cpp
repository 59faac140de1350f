#include "ssid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "ssid/bounds.hpp"
#include "ssid/error.hpp"

namespace ssid {

Realization reference_realization(const SteadyKalman& kf, const HankelParams& hp) {
  return balanced_realization(hankel_estimate_from(hankel_true(kf, hp)), kf.n(), kf.m(), hp.f, hp.p);
}

Matrix procrustes_align(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw Error(ErrorKind::DimensionMismatch, "Procrustes inputs differ in shape");
  Eigen::JacobiSVD<Matrix> svd(y.transpose() * x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) throw Error(ErrorKind::SvdFailure, "Procrustes SVD failed");
  return svd.matrixU() * svd.matrixV().transpose();
}

double spectrum_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "spectra of different sizes");
  const auto n = a.rows();
  if (n > 10) throw Error(ErrorKind::InvalidArgument, "spectrum matching is enumerated only for n <= 10");
  Eigen::EigenSolver<Matrix> ea(a, false);
  Eigen::EigenSolver<Matrix> eb(b, false);
  if (ea.info() != Eigen::Success || eb.info() != Eigen::Success)
    throw Error(ErrorKind::EigenFailure, "eigensolver did not converge");
  const auto& la = ea.eigenvalues();
  const auto& lb = eb.eigenvalues();
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, std::abs(la(i) - lb(perm[static_cast<size_t>(i)])));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return n == 0 ? 0.0 : best;
}

ErrorRecord error_metrics(const Realization& est, const Realization& ref, const Matrix& ghat, const Matrix& g,
                          int f, int p) {
  if (est.ahat.rows() != ref.ahat.rows() || est.chat.rows() != ref.chat.rows() ||
      est.obs_f.rows() != ref.obs_f.rows() || est.ctrl_p.cols() != ref.ctrl_p.cols() || ghat.rows() != g.rows() ||
      ghat.cols() != g.cols())
    throw Error(ErrorKind::DimensionMismatch, "estimate and reference differ in shape");

  const Matrix T = procrustes_align(est.obs_f, ref.obs_f);
  ErrorRecord rec;
  rec.err_g = linalg::spectral_norm(ghat - g);
  rec.err_a = linalg::spectral_norm(est.ahat - T.transpose() * ref.ahat * T);
  rec.err_c = linalg::spectral_norm(est.chat - ref.chat * T);
  rec.err_k = linalg::spectral_norm(est.khat - T.transpose() * ref.khat);

  const int count = f + p + 1;
  const Matrix mk_est = markov_parameters(est.ahat, est.chat, est.khat, count);
  const Matrix mk_ref = markov_parameters(ref.ahat, ref.chat, ref.khat, count);
  const auto m = est.chat.rows();
  for (int i = 0; i < count; ++i)
    rec.err_markov =
        std::max(rec.err_markov, linalg::spectral_norm(mk_est.middleRows(i * m, m) - mk_ref.middleRows(i * m, m)));
  rec.err_spectrum = spectrum_distance(est.ahat, ref.ahat);
  return rec;
}

PeEvents pe_events(const DataMatrices& dm, const SteadyKalman& kf, const HankelParams& hp,
                   std::optional<double> tol) {
  if (!dm.has_diagnostics()) throw Error(ErrorKind::MissingDiagnostics, "PE events need eminus and xhat_block");
  const double N = static_cast<double>(dm.N);
  const Matrix Tp = toeplitz(kf.A(), kf.C(), kf.K, hp.p);
  const Matrix Op = observability(kf.A(), kf.C(), hp.p);
  const auto noise = sigma_e_matrix(kf, hp.p);

  const Matrix gram = dm.yminus * dm.yminus.transpose();
  const Matrix TE = Tp * dm.eminus;
  const Matrix noise_gram = TE * TE.transpose();
  const Matrix OX = Op * dm.xhat_block;
  const Matrix state_gram = OX * OX.transpose();
  const double t = tol.value_or(1e-8 * linalg::max_eig_sym(gram));

  PeEvents ev;
  ev.pe_e = linalg::min_eig_sym(noise_gram - 0.5 * N * noise.sigma) >= -t;
  ev.pe_y = linalg::min_eig_sym(gram - 0.5 * state_gram - 0.5 * noise_gram) >= -t;
  ev.pe_margin = linalg::min_eig_sym(gram) - N * noise.sigma_min / 4.0;
  return ev;
}

std::pair<double, double> truncation_diagnostic(const DataMatrices& dm, const SteadyKalman& kf,
                                                const HankelParams& hp) {
  if (!dm.has_diagnostics()) throw Error(ErrorKind::MissingDiagnostics, "truncation diagnostic needs eminus/xhat");
  const Matrix Tp = toeplitz(kf.A(), kf.C(), kf.K, hp.p);
  const Matrix Op = observability(kf.A(), kf.C(), hp.p);
  const Matrix gram = dm.yminus * dm.yminus.transpose();
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success || linalg::min_eig_sym(gram) <= 0.0)
    throw Error(ErrorKind::SingularGram, "Y- Y-^T is not invertible");
  const Matrix TE = Tp * dm.eminus;
  // M·gram⁻¹ = (gram⁻¹·Mᵀ)ᵀ since gram is symmetric
  const Matrix first = llt.solve((TE * TE.transpose()).transpose()).transpose();
  const Matrix second = llt.solve((TE * dm.xhat_block.transpose() * Op.transpose()).transpose()).transpose();
  return {linalg::spectral_norm(first), linalg::spectral_norm(second)};
}

}  // namespace ssid

#pragma once

#include "ssid/model.hpp"
#include "ssid/simulate.hpp"

namespace ssid {

/// Past horizon p and future horizon f of the regression.
struct HankelParams {
  int p = 0;
  int f = 0;
};

/// Throws InvalidArgument unless p ≥ n+1 and f ≥ n+1.
void check_horizons(const HankelParams& hp, Eigen::Index n);

/// Batch regression data. Column k holds the windows that start at sample k, so the
/// "present" of column k is sample p + k.
struct DataMatrices {
  Matrix yplus;       // mf x N, column k stacks y_{p+k} .. y_{p+k+f-1}
  Matrix yminus;      // mp x N, column k stacks y_k .. y_{k+p-1}
  Matrix eplus;       // same pattern on innovations (diagnostic)
  Matrix eminus;
  Matrix xhat_block;  // n x N, column k is x̂_k
  Matrix xhat_plus;   // n x N, column k is x̂_{p+k}
  Eigen::Index N = 0;

  bool has_diagnostics() const { return eminus.cols() == N && xhat_block.cols() == N && N > 0; }
};

/// Stack C, CA, ..., CA^{k-1}.
Matrix observability(const Matrix& A, const Matrix& C, int k);
/// [(A−KC)^{k-1}K, ..., (A−KC)K, K].
Matrix controllability_rev(const Matrix& A, const Matrix& K, const Matrix& C, int k);
/// Block lower-triangular Toeplitz with identity diagonal and C A^{i-j-1} K below it.
Matrix toeplitz(const Matrix& A, const Matrix& C, const Matrix& K, int s);
/// G = 𝒪_f 𝒦_p.
Matrix hankel_true(const SteadyKalman& kf, const HankelParams& hp);

DataMatrices build_data_matrices(const Trajectory& traj, const HankelParams& hp);

}  // namespace ssid

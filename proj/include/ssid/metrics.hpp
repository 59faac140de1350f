#pragma once

#include <optional>
#include <ostream>

#include "ssid/identify.hpp"

namespace ssid {

/// Errors of an estimated realization against the balanced reference built from the exact G.
struct ErrorRecord {
  double err_g = 0.0;
  double err_a = 0.0;
  double err_c = 0.0;
  double err_k = 0.0;
  double err_markov = 0.0;
  double err_spectrum = 0.0;
  bool pe_y = false;
  bool pe_e = false;
  double pe_margin = 0.0;
};

struct PeEvents {
  bool pe_y = false;
  bool pe_e = false;
  double pe_margin = 0.0;
};

/// Balanced realization of the exact G = 𝒪_f 𝒦_p.
Realization reference_realization(const SteadyKalman& kf, const HankelParams& hp);

/// Orthonormal T minimizing ‖x − y·T‖_F.
Matrix procrustes_align(const Matrix& x, const Matrix& y);

/// Optimal matching distance min over pairings of max |λ_i − λ̂_π(i)|.
double spectrum_distance(const Matrix& a, const Matrix& b);

/// Fills everything except the PE fields. Markov parameters are compared for i = 0..f+p.
ErrorRecord error_metrics(const Realization& est, const Realization& ref, const Matrix& ghat, const Matrix& g,
                          int f, int p);

/// PE events on one batch. Without an explicit tol, tol = 1e-8·‖Y₋Y₋ᵀ‖₂.
PeEvents pe_events(const DataMatrices& dm, const SteadyKalman& kf, const HankelParams& hp,
                   std::optional<double> tol = std::nullopt);

/// (‖𝒯_pE₋E₋ᵀ𝒯_pᵀ(Y₋Y₋ᵀ)⁻¹‖₂, ‖𝒯_pE₋X̂ᵀ𝒪_pᵀ(Y₋Y₋ᵀ)⁻¹‖₂)
std::pair<double, double> truncation_diagnostic(const DataMatrices& dm, const SteadyKalman& kf,
                                                const HankelParams& hp);

}  // namespace ssid

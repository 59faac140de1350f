#pragma once

#include <cstdint>
#include <iosfwd>

#include "ssid/model.hpp"

namespace ssid {

/// Output path with columns indexed by time. `e` and `xhat` are diagnostics; they are
/// empty for trajectories read back from CSV.
struct Trajectory {
  Matrix y;     // m x N̄
  Matrix e;     // m x N̄
  Matrix xhat;  // n x (N̄ + 1), column 0 is x̂₀ = 0
  std::uint64_t seed = 0;

  Eigen::Index length() const { return y.cols(); }
  bool has_diagnostics() const { return e.cols() == y.cols() && xhat.cols() == y.cols() + 1; }
};

struct SimConfig {
  Eigen::Index nbar = 0;
  std::uint64_t seed = 0;
};

/// Samples e_k ~ N(0, Rbar) and runs the steady-state innovation recursion from x̂₀ = 0.
Trajectory simulate_innovation(const SteadyKalman& kf, const SimConfig& cfg);

/// Samples the original model with x₀ ~ N(0, P), then reconstructs innovations and
/// filter states by running the steady-state filter on y.
Trajectory simulate_statespace(const StateSpace& ss, const SteadyKalman& kf, const SimConfig& cfg);

/// Runs the steady-state filter on observed outputs: e_k = y_k − C x̂_k, x̂_{k+1} = A x̂_k + K e_k.
void reconstruct_innovations(const SteadyKalman& kf, Trajectory& traj);

/// CSV with header "k,y_1,...,y_m".
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);

}  // namespace ssid

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ssid/error.hpp"
#include "ssid/simulate.hpp"
#include "support.hpp"

using namespace ssid;

namespace {

/// Γ_∞ for the scalar innovation system by plain fixed-point iteration.
double lyapunov_scalar(double a, double q) {
  double g = 0.0;
  for (int i = 0; i < 10000; ++i) g = a * g * a + q;
  return g;
}

}  // namespace

TEST_CASE("K = 0 keeps the filter state at zero") {
  const auto ss = StateSpace::make(testing::scalar(0.5), testing::scalar(0.0), testing::scalar(1.0),
                                   testing::scalar(1.0));
  const auto kf = solve_dare(ss);
  REQUIRE(kf.K(0, 0) == 0.0);
  const auto t = simulate_innovation(kf, {200, 3});
  CHECK(t.xhat.cwiseAbs().maxCoeff() == 0.0);
  CHECK((t.y.array() == t.e.array()).all());
}

TEST_CASE("innovation recursion holds exactly and x̂₀ = 0") {
  const auto kf = solve_dare(testing::random_system(5, 3, 2));
  const auto t = simulate_innovation(kf, {500, 11});
  CHECK(t.xhat.col(0).isZero());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < t.length(); ++k) {
    worst = std::max(worst, (t.xhat.col(k + 1) - kf.A() * t.xhat.col(k) - kf.K * t.e.col(k)).norm());
    worst = std::max(worst, (t.y.col(k) - kf.C() * t.xhat.col(k) - t.e.col(k)).norm());
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("feeding y back through the filter reproduces e and x̂") {
  const auto kf = solve_dare(testing::random_system(6, 2, 2));
  const auto t = simulate_innovation(kf, {400, 12});
  Trajectory copy;
  copy.y = t.y;
  reconstruct_innovations(kf, copy);
  CHECK((copy.e - t.e).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((copy.xhat - t.xhat).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("simulation is deterministic in the seed") {
  const auto kf = solve_dare(testing::scalar_system());
  const auto a = simulate_innovation(kf, {1000, 99});
  const auto b = simulate_innovation(kf, {1000, 99});
  const auto c = simulate_innovation(kf, {1000, 100});
  CHECK((a.y.array() == b.y.array()).all());
  CHECK_FALSE((a.y.array() == c.y.array()).all());
}

TEST_CASE("long-run output variance matches C Γ_∞ Cᵀ + Rbar") {
  const auto kf = solve_dare(testing::scalar_system());
  const double K = kf.K(0, 0);
  const double rbar = kf.Rbar(0, 0);
  const double expected = lyapunov_scalar(0.9, K * rbar * K) + rbar;
  const auto t = simulate_innovation(kf, {100000, 2024});
  const double mean = t.y.mean();
  const double var = (t.y.array() - mean).square().sum() / static_cast<double>(t.length() - 1);
  CHECK(std::abs(var - expected) / expected < 0.05);

  const double evar = t.e.array().square().mean();
  CHECK(std::abs(evar - rbar) / rbar < 0.03);
}

TEST_CASE("state-space and innovation generators agree in distribution") {
  // With x₀ ~ N(0, P) the state-space model has Var(y_k) = CΓ_kCᵀ + CPCᵀ + R = CΓ_kCᵀ + Rbar,
  // the same as the innovation form started at x̂₀ = 0.
  const auto ss = testing::scalar_system();
  const auto kf = solve_dare(ss);
  const int L = 50;
  const int R = 2000;
  Vector v_innov = Vector::Zero(L);
  Vector v_state = Vector::Zero(L);
  for (int r = 0; r < R; ++r) {
    const auto a = simulate_innovation(kf, {L, derive_seed(1, r)});
    const auto b = simulate_statespace(ss, kf, {L, derive_seed(2, r)});
    v_innov += a.y.row(0).transpose().cwiseAbs2();
    v_state += b.y.row(0).transpose().cwiseAbs2();
  }
  v_innov /= R;
  v_state /= R;

  // Each per-step comparison sits near 2.2 standard errors at 10%, so a few of the 50
  // steps may exceed it by chance.
  int within = 0;
  for (int k = 0; k < L; ++k) within += std::abs(v_innov(k) - v_state(k)) / v_state(k) <= 0.10;
  CHECK(within >= 45);
  for (int b = 0; b < L / 10; ++b) {
    const double x = v_innov.segment(10 * b, 10).mean();
    const double y = v_state.segment(10 * b, 10).mean();
    CHECK(std::abs(x - y) / y < 0.10);
  }
  double gamma = 0.0;
  const double k = kf.K(0, 0);
  const double rbar = kf.Rbar(0, 0);
  for (int i = 0; i < L; ++i) {
    CHECK(std::abs(v_state(i) - (gamma + rbar)) / (gamma + rbar) < 0.15);
    gamma = 0.81 * gamma + k * rbar * k;
  }
}

TEST_CASE("state-space generator reconstructs its own innovations") {
  const auto ss = testing::random_system(8, 2, 1);
  const auto kf = solve_dare(ss);
  const auto t = simulate_statespace(ss, kf, {300, 5});
  REQUIRE(t.has_diagnostics());
  for (Eigen::Index k = 0; k < t.length(); ++k)
    CHECK((t.y.col(k) - kf.C() * t.xhat.col(k) - t.e.col(k)).norm() <= 1e-12);
}

TEST_CASE("trajectory CSV round trip") {
  const auto kf = solve_dare(testing::random_system(9, 2, 2));
  const auto t = simulate_innovation(kf, {25, 1});
  std::stringstream ss;
  write_trajectory_csv(ss, t);
  const std::string text = ss.str();
  CHECK(text.rfind("k,y_1,y_2\n", 0) == 0);
  const auto back = read_trajectory_csv(ss);
  CHECK(back.y.rows() == 2);
  CHECK(back.y.cols() == 25);
  CHECK((back.y - t.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(back.has_diagnostics());

  std::stringstream bad("x,y\n0,1\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad), Error);
}

TEST_CASE("simulate rejects bad configurations") {
  const auto kf = solve_dare(testing::scalar_system());
  CHECK_THROWS_AS(simulate_innovation(kf, {0, 1}), Error);
  SteadyKalman broken = kf;
  broken.Rbar = testing::scalar(-1.0);
  try {
    simulate_innovation(broken, {10, 1});
    FAIL("expected CholeskyFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CholeskyFailure);
  }
}

#include <cmath>

#include "doctest.h"
#include "ssid/bounds.hpp"
#include "ssid/error.hpp"
#include "ssid/metrics.hpp"
#include "ssid/simulate.hpp"
#include "support.hpp"

using namespace ssid;

namespace {

Realization rotated(const Realization& r, const Matrix& T) {
  Realization out = r;
  out.obs_f = r.obs_f * T;
  out.ctrl_p = T.transpose() * r.ctrl_p;
  out.ahat = T.transpose() * r.ahat * T;
  out.chat = r.chat * T;
  out.khat = T.transpose() * r.khat;
  return out;
}

DataMatrices scalar_batch(std::uint64_t seed, int nbar, int p, int f) {
  const auto kf = solve_dare(testing::scalar_system());
  return build_data_matrices(simulate_innovation(kf, {nbar, seed}), {p, f});
}

}  // namespace

TEST_CASE("procrustes alignment") {
  Gaussian g(3);
  const Matrix y = g.matrix(8, 3);
  CHECK((procrustes_align(y, y) - Matrix::Identity(3, 3)).norm() < 1e-12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix yy = g.matrix(10, 4);
    const Matrix T0 = testing::random_orthonormal(g, 4);
    CHECK((procrustes_align(yy * T0, yy) - T0).norm() < 1e-10);

    const Matrix x = g.matrix(10, 4);
    const Matrix T = procrustes_align(x, yy);
    CHECK((T.transpose() * T - Matrix::Identity(4, 4)).norm() < 1e-12);
    CHECK((x - yy * T).norm() <= (x - yy).norm() + 1e-12);
    for (int k = 0; k < 10; ++k) CHECK((x - yy * T).norm() <= (x - yy * testing::random_orthonormal(g, 4)).norm() + 1e-12);
  }
}

TEST_CASE("reference realization reproduces the system") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto kf = solve_dare(testing::random_system(seed + 900, 3, 2));
    const HankelParams hp{5, 4};
    const auto ref = reference_realization(kf, hp);
    const int count = hp.f + hp.p + 1;
    CHECK((markov_parameters(ref.ahat, ref.chat, ref.khat, count) - markov_parameters(kf.A(), kf.C(), kf.K, count))
              .norm() < 1e-8);
    CHECK(spectrum_distance(ref.ahat, kf.A()) < 1e-8);
    CHECK((ref.obs_f * ref.ctrl_p - hankel_true(kf, hp)).norm() < 1e-10);
  }
}

TEST_CASE("spectrum distance") {
  Matrix a(2, 2), b(2, 2);
  a << 0.5, 0.0, 0.0, -0.2;
  b << -0.25, 0.0, 0.0, 0.55;
  CHECK(spectrum_distance(a, b) == doctest::Approx(0.05));
  Matrix rot(2, 2);
  rot << 0.0, -0.5, 0.5, 0.0;  // ±0.5i
  CHECK(spectrum_distance(rot, Matrix::Zero(2, 2)) == doctest::Approx(0.5));
  CHECK(spectrum_distance(rot, rot.transpose()) < 1e-12);
}

TEST_CASE("error metrics") {
  const auto kf = solve_dare(testing::random_system(41, 3, 2));
  const HankelParams hp{5, 4};
  const auto ref = reference_realization(kf, hp);
  const Matrix G = hankel_true(kf, hp);

  const auto same = error_metrics(ref, ref, G, G, hp.f, hp.p);
  for (double v : {same.err_g, same.err_a, same.err_c, same.err_k, same.err_markov, same.err_spectrum})
    CHECK(v < 1e-10);

  Gaussian g(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rot = rotated(ref, testing::random_orthonormal(g, 3));
    const auto e = error_metrics(rot, ref, G, G, hp.f, hp.p);
    CHECK(e.err_a <= 1e-8);
    CHECK(e.err_c <= 1e-8);
    CHECK(e.err_k <= 1e-8);
  }

  Realization noisy = ref;
  noisy.ahat += 0.01 * g.matrix(3, 3);
  noisy.khat += 0.01 * g.matrix(3, 2);
  const auto base = error_metrics(noisy, ref, G, G, hp.f, hp.p);
  CHECK(base.err_markov > 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix S = Matrix::Identity(3, 3) + 0.3 * g.matrix(3, 3);
    if (linalg::sigma_min(S) < 0.2) continue;
    Realization sim = noisy;
    const Matrix Si = S.inverse();
    sim.ahat = Si * noisy.ahat * S;
    sim.chat = noisy.chat * S;
    sim.khat = Si * noisy.khat;
    const auto e = error_metrics(sim, ref, G, G, hp.f, hp.p);
    CHECK(e.err_markov == doctest::Approx(base.err_markov).epsilon(1e-8));
    CHECK(e.err_spectrum == doctest::Approx(base.err_spectrum).epsilon(1e-8));
  }

  Realization wrong = ref;
  wrong.ahat = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(error_metrics(wrong, ref, G, G, hp.f, hp.p), Error);
}

TEST_CASE("PE events") {
  const auto kf = solve_dare(testing::scalar_system());
  const HankelParams hp{2, 2};
  auto dm = scalar_batch(1, 4000, hp.p, hp.f);
  const auto ev = pe_events(dm, kf, hp);
  CHECK(ev.pe_e);
  CHECK(ev.pe_y);
  CHECK(ev.pe_margin > 0.0);

  dm.eminus.setZero();
  CHECK_FALSE(pe_events(dm, kf, hp).pe_e);

  DataMatrices bare = scalar_batch(1, 200, hp.p, hp.f);
  bare.eminus.resize(0, 0);
  try {
    pe_events(bare, kf, hp);
    FAIL("expected MissingDiagnostics");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MissingDiagnostics);
  }
}

TEST_CASE("PE margin is positive in most trials at N = 4000") {
  const auto kf = solve_dare(testing::scalar_system());
  const HankelParams hp{2, 2};
  int ok = 0;
  for (int s = 0; s < 200; ++s) {
    const auto dm = build_data_matrices(simulate_innovation(kf, {4000 + 3, derive_seed(2024, s)}), hp);
    if (pe_events(dm, kf, hp).pe_margin > 0.0) ++ok;
  }
  CHECK(ok >= 180);
}

TEST_CASE("weighted noise gram concentrates on its covariance") {
  const auto kf = solve_dare(testing::scalar_system());
  const int p = 2;
  const Matrix Tp = toeplitz(kf.A(), kf.C(), kf.K, p);
  const Matrix sigma = sigma_e_matrix(kf, p).sigma;
  Matrix acc = Matrix::Zero(p, p);
  const int R = 500;
  std::int64_t N = 0;
  for (int s = 0; s < R; ++s) {
    const auto dm = build_data_matrices(simulate_innovation(kf, {2000 + p + 2 - 1, derive_seed(55, s)}), {p, 2});
    const Matrix TE = Tp * dm.eminus;
    acc += TE * TE.transpose() / static_cast<double>(dm.N);
    N = dm.N;
  }
  acc /= R;
  CHECK(N == 2000);
  CHECK(((acc - sigma).array().abs() / sigma.array().abs()).maxCoeff() < 0.1);
}

TEST_CASE("truncation diagnostic") {
  const auto kf = solve_dare(testing::scalar_system());
  const HankelParams hp{2, 2};
  const auto dm = scalar_batch(8, 4000, hp.p, hp.f);
  const auto [a, b] = truncation_diagnostic(dm, kf, hp);
  CHECK(a > 0.0);
  CHECK(b >= 0.0);
  CHECK(a <= 2.0);
  CHECK(b <= 1.0);

  DataMatrices flat = dm;
  flat.yminus.setZero();
  try {
    truncation_diagnostic(flat, kf, hp);
    FAIL("expected SingularGram");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularGram);
  }
}

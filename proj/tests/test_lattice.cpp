#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sdehmc/energy.hpp"
#include "sdehmc/lattice.hpp"
#include "support/oracles.hpp"

using namespace sdehmc;

namespace {

struct Shape {
  long n, j;
};

const Shape kShapes[] = {{1, 1}, {10, 1}, {1, 10}, {10, 10}, {10, 30}, {3, 7}};

}  // namespace

TEST(Staging, RoundTripOnRandomPaths) {
  oracle::Gen g(21);
  for (const auto [n, j] : kShapes) {
    const auto L = build_layout(n, j, 833.0);
    for (int rep = 0; rep < 20; ++rep) {
      const auto q = g.normals(L.N, 2.0);
      const auto back = staging_inverse(staging_forward(q, L), L);
      for (std::size_t i = 0; i < L.N; ++i) ASSERT_NEAR(back[i], q[i], 1e-12) << "N=" << L.N;
      const auto u = g.normals(L.N, 2.0);
      const auto fwd = staging_forward(staging_inverse(u, L), L);
      for (std::size_t i = 0; i < L.N; ++i) ASSERT_NEAR(fwd[i], u[i], 1e-12);
    }
  }
}

TEST(Staging, ForwardMatchesDefinition) {
  oracle::Gen g(22);
  const auto L = build_layout(4, 6, 10.0);
  const auto q = g.normals(L.N);
  const auto u = staging_forward(q, L);
  for (std::size_t s = 0; s < L.n; ++s) {
    const std::size_t b = s * L.j;
    EXPECT_DOUBLE_EQ(u[b], q[b]);
    for (std::size_t m = 1; m < L.j; ++m) {
      const double star = (static_cast<double>(m) * q[b + m + 1] + q[b]) / static_cast<double>(m + 1);
      EXPECT_NEAR(u[b + m], q[b + m] - star, 1e-14);
    }
  }
  EXPECT_DOUBLE_EQ(u[L.N - 1], q[L.N - 1]);
}

TEST(Staging, LinearSegmentsHaveZeroStagingCoordinates) {
  const auto L = build_layout(5, 8, 40.0);
  oracle::Gen g(23);
  std::vector<double> ends(L.n + 1);
  for (double& e : ends) e = g.normal();
  std::vector<double> q(L.N);
  for (std::size_t i = 0; i < L.N; ++i) {
    const std::size_t s = std::min(i / L.j, L.n - 1);
    const double w = static_cast<double>(i - s * L.j) / static_cast<double>(L.j);
    q[i] = (1.0 - w) * ends[s] + w * ends[s + 1];
  }
  const auto u = staging_forward(q, L);
  for (std::size_t i = 0; i < L.N; ++i) {
    if (L.is_boundary(i)) {
      EXPECT_NEAR(u[i], q[i], 1e-14);
    } else {
      EXPECT_NEAR(u[i], 0.0, 1e-13);
    }
  }
  const auto back = staging_inverse(u, L);
  for (std::size_t i = 0; i < L.N; ++i) EXPECT_NEAR(back[i], q[i], 1e-13);
}

TEST(Staging, ConstantPath) {
  const auto L = build_layout(3, 5, 9.0);
  const std::vector<double> q(L.N, 2.5);
  const auto u = staging_forward(q, L);
  for (std::size_t i = 0; i < L.N; ++i) EXPECT_NEAR(u[i], L.is_boundary(i) ? 2.5 : 0.0, 1e-14);
  const auto zero = staging_inverse(std::vector<double>(L.N, 0.0), L);
  for (double v : zero) EXPECT_EQ(v, 0.0);
}

TEST(Staging, InverseMatchesExplicitSum) {
  oracle::Gen g(24);
  for (const auto [n, j] : kShapes) {
    const auto L = build_layout(n, j, 833.0);
    const auto u = g.normals(L.N, 1.5);
    const auto q = staging_inverse(u, L);
    const auto ref = oracle::explicit_staging_inverse(u, L.n, L.j);
    for (std::size_t i = 0; i < L.N; ++i) {
      EXPECT_NEAR(q[i], static_cast<double>(ref[i]), 1e-12) << "N=" << L.N << " i=" << i;
    }
  }
}

TEST(Staging, AdjointIsDenseTranspose) {
  oracle::Gen g(25);
  for (const auto [n, j] : {Shape{2, 5}, Shape{10, 1}, Shape{1, 10}, Shape{4, 4}}) {
    const auto L = build_layout(n, j, 20.0);
    ASSERT_TRUE(L.N <= 21);
    const auto A = oracle::dense_inverse_matrix(L);
    // unit vectors at every index, including boundaries
    for (std::size_t k = 0; k < L.N; ++k) {
      std::vector<double> e(L.N, 0.0);
      e[k] = 1.0;
      const auto gu = staging_adjoint(e, L);
      for (std::size_t c = 0; c < L.N; ++c) EXPECT_NEAR(gu[c], A[k][c], 1e-14);
    }
    const auto gq = g.normals(L.N);
    const auto gu = staging_adjoint(gq, L);
    for (std::size_t c = 0; c < L.N; ++c) {
      double want = 0.0;
      for (std::size_t r = 0; r < L.N; ++r) want += A[r][c] * gq[r];
      EXPECT_NEAR(gu[c], want, 1e-12);
    }
  }
  const auto L11 = build_layout(2, 5, 10.0);
  ASSERT_EQ(L11.N, 11u);
  for (double v : staging_adjoint(std::vector<double>(L11.N, 0.0), L11)) EXPECT_EQ(v, 0.0);
}

TEST(Staging, AdjointDirectionalDerivative) {
  // d/de H1(staging_inverse(u + e d)) = <adjoint(dH1/dq), d>
  const auto post = oracle::reference_posterior(30);
  const auto& L = post.layout();
  oracle::Gen g(26);
  for (int rep = 0; rep < 5; ++rep) {
    const auto s = oracle::random_state(post, g);
    const auto dir = g.normals(L.N);
    auto action = [&](double eps) {
      std::vector<double> u = s.u;
      for (std::size_t i = 0; i < L.N; ++i) u[i] += eps * dir[i];
      return oracle::brute_drift_action(oracle::explicit_staging_inverse(u, L.n, L.j), s.theta[0],
                                        s.theta[1], post.input(), L);
    };
    const double h = 1e-5;
    const double fd = static_cast<double>((action(h) - action(-h)) / (2.0L * h));

    // dH1/dq by central differences in q, then the library adjoint
    const auto q0 = staging_inverse(s.u, L);
    std::vector<double> gq(L.N);
    for (std::size_t i = 0; i < L.N; ++i) {
      std::vector<long double> qp(q0.begin(), q0.end()), qm = qp;
      qp[i] += h;
      qm[i] -= h;
      gq[i] = static_cast<double>(
          (oracle::brute_drift_action(qp, s.theta[0], s.theta[1], post.input(), L) -
           oracle::brute_drift_action(qm, s.theta[0], s.theta[1], post.input(), L)) /
          (2.0L * h));
    }
    const auto gu = staging_adjoint(gq, L);
    double dot = 0.0;
    for (std::size_t i = 0; i < L.N; ++i) dot += gu[i] * dir[i];
    EXPECT_NEAR(dot, fd, 1e-6 * std::abs(fd) + 1e-9);
  }
}

TEST(Staging, HarmonicEnergyIdentity) {
  // (T / 2dt) sum (q_i - q_{i-1})^2 = staging oscillators + boundary coupling
  oracle::Gen g(27);
  for (const auto [n, j] : kShapes) {
    const auto L = build_layout(n, j, 833.0);
    for (int rep = 0; rep < 10; ++rep) {
      const auto q = g.normals(L.N, 1.0);
      long double bonds = 0.0L;
      for (std::size_t i = 1; i < L.N; ++i) bonds += (q[i] - q[i - 1]) * static_cast<long double>(q[i] - q[i - 1]);
      bonds *= 0.5L * L.T / L.dt;

      const auto u = staging_forward(q, L);
      double staged = 0.0;
      for (std::size_t s = 0; s < L.n; ++s) {
        const std::size_t b = s * L.j;
        for (std::size_t m = 1; m < L.j; ++m) staged += 0.5 * staging_stiffness(L, m) * u[b + m] * u[b + m];
        const double d = u[b] - u[b + L.j];
        staged += 0.5 * L.T / (static_cast<double>(L.j) * L.dt) * d * d;
      }
      EXPECT_NEAR(staged, static_cast<double>(bonds), 1e-10 * static_cast<double>(bonds));
    }
  }
}

TEST(Staging, LengthMismatchThrows) {
  const auto L = build_layout(2, 3, 6.0);
  EXPECT_THROW(staging_forward(std::vector<double>(5, 0.0), L), ValidationError);
  EXPECT_THROW(staging_inverse(std::vector<double>(8, 0.0), L), ValidationError);
  EXPECT_THROW(staging_adjoint(std::vector<double>(3, 0.0), L), ValidationError);
}

TEST(Masses, EffectiveMassConvention) {
  const auto L = build_layout(10, 30, 833.0);
  const auto m = effective_masses(MassConfig{}, L);
  EXPECT_DOUBLE_EQ(m.boundary, 720.0);
  EXPECT_NEAR(m.staging, 130.0 / L.dt, 1e-12);
  EXPECT_DOUBLE_EQ(m.params[0], 150.0);
  EXPECT_DOUBLE_EQ(m.bead(L, 0), 720.0);
  EXPECT_DOUBLE_EQ(m.bead(L, 1), m.staging);
  EXPECT_DOUBLE_EQ(m.bead(L, 300), 720.0);
}

TEST(Masses, ZeroOrNegativeRejected) {
  EXPECT_THROW((MassConfig{0.0, 130.0, {150.0, 150.0}}.validate()), ValidationError);
  EXPECT_THROW((MassConfig{720.0, -1.0, {150.0, 150.0}}.validate()), ValidationError);
  EXPECT_THROW((MassConfig{720.0, 130.0, {150.0, 0.0}}.validate()), ValidationError);
  EXPECT_NO_THROW(MassConfig{}.validate());
}

TEST(InitialState, BoundaryFromDataAndZeroStaging) {
  const auto data = oracle::reference_dataset();
  const auto r = oracle::reference_input();
  const auto L = build_layout(10, 30, 833.0);
  const auto theta0 = to_dimensionless({200.0, 0.5, 833.0});
  const auto s = initial_state(data, theta0, L, r);
  for (std::size_t i = 0; i < L.N; ++i) {
    if (L.is_boundary(i)) {
      const std::size_t k = i / L.j;
      EXPECT_NEAR(s.u[i], std::log(data.values[k] / r(data.times[k])) / theta0.beta, 1e-12);
    } else {
      EXPECT_EQ(s.u[i], 0.0);
    }
    EXPECT_EQ(s.p[i], 0.0);
  }
  EXPECT_DOUBLE_EQ(s.beta(), theta0.beta);
  EXPECT_DOUBLE_EQ(s.gamma(), 0.5);

  const PathPosterior post(data, r, 0.1, 30, MassConfig{});
  EXPECT_TRUE(std::isfinite(post.energy(s).total));

  EXPECT_THROW(initial_state(data, theta0, build_layout(9, 30, 833.0), r), ValidationError);
  EXPECT_THROW(initial_state(data, {0.0, 0.5}, L, r), ValidationError);
}

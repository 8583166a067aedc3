#include <cmath>
#include <random>

#include "doctest.h"
#include "mzgrid/errors.hpp"
#include "mzgrid/memory_kernel.hpp"

using namespace mzgrid;

namespace {

const Partition kPart = Partition::three_bus(-0.3, 0.8);

HermiteBasis basis_for(int order, HermiteConvention conv = HermiteConvention::kOrthonormal) {
  return HermiteBasis(order, {0.0, 0.0, -0.16}, {0.01, 0.01, 0.01}, conv);
}

MatrixSeries constant_series(std::size_t samples, const RowMatrix& m) {
  MatrixSeries s(samples, static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (std::size_t n = 0; n < samples; ++n) s.matrix(n) = m;
  return s;
}

MatrixSeries scalar_series(std::size_t samples, double v) {
  RowMatrix m(1, 1);
  m(0, 0) = v;
  return constant_series(samples, m);
}

double max_abs(const MatrixSeries& s) {
  double m = 0.0;
  for (double v : s.raw()) m = std::max(m, std::abs(v));
  return m;
}

// Short kernel shared by several cases.
struct SmallKernel {
  HermiteBasis basis = basis_for(1);
  QuadratureRule rule = build_quadrature(basis, 7);
  GridParams params;
  double dt = 5e-5;
  EnsembleRun ensemble{rule, kPart, params, dt, 0.02};
  KernelTables tables = [this] {
    KernelTables t = compute_tables(ensemble, basis, rule);
    t.b = solve_volterra(t.f, t.g, t.dt_k);
    t.memory_matrix = assemble_memory_matrix(t.b, t.gamma, t.dt_k);
    return t;
  }();
};

const SmallKernel& small_kernel() {
  static const SmallKernel k;
  return k;
}

}  // namespace

TEST_CASE("Liouvillian of simple functions") {
  const GridParams p;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> a(-1, 1), v(0.6, 1.2);
  for (int trial = 0; trial < 10; ++trial) {
    const StateVector u(a(rng), a(rng), a(rng), a(rng), v(rng));
    const Vector5 r = rhs(u, p);
    for (std::size_t k = 0; k < kStateDim; ++k) {
      auto coord = [k](const StateVector&) {
        Vector5 g = Vector5::Zero();
        g[static_cast<Eigen::Index>(k)] = 1.0;
        return g;
      };
      CHECK(liouville_apply(coord, u, p) == r[static_cast<Eigen::Index>(k)]);
    }
    CHECK(liouville_apply([](const StateVector&) { return Vector5::Zero().eval(); }, u, p) == 0.0);
    // energy: L Phi is the dissipation rate
    auto grad_phi = [&](const StateVector& s) { return gradient(s, p); };
    CHECK(liouville_apply(grad_phi, u, p) == doctest::Approx(dissipation_rate(u, p)));
  }
}

TEST_CASE("Liouvillian matches the time derivative along the flow") {
  const GridParams p;
  auto grad_phi = [&](const StateVector& s) { return gradient(s, p); };
  auto fd_error = [&](double dt) {
    const Trajectory t = simulate_full(default_initial_state(), p, dt, 0.2);
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const auto r0 = t.row(i), r1 = t.row(i + 1);
      const StateVector u0(r0[0], r0[1], r0[2], r0[3], r0[4]), u1(r1[0], r1[1], r1[2], r1[3], r1[4]);
      const double fd = (energy(u1, p) - energy(u0, p)) / dt;
      worst = std::max(worst, std::abs(fd - liouville_apply(grad_phi, u0, p)));
    }
    return worst;
  };
  const double e1 = fd_error(1e-4), e2 = fd_error(5e-5);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("initial fluctuation") {
  const GridParams p;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> a(-0.5, 0.5), v(0.6, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    const StateVector at_anchor(a(rng), a(rng), a(rng), -0.3, 0.8);
    for (std::size_t j = 0; j < kStateDim; ++j) CHECK(initial_fluctuation(j, at_anchor, kPart, p) == 0.0);

    const StateVector u(a(rng), a(rng), a(rng), a(rng), v(rng));
    CHECK(initial_fluctuation(kAlpha2, u, kPart, p) == 0.0);

    // R1 = (-D1 w1 + P_2-flow + P_3-flow)/M1; only the flows see alpha3 and V3
    const double a2 = u.alpha2(), a3 = u.alpha3(), v3 = u.v3();
    auto flows = [&](double alpha3, double volt) {
      return p.b3 * p.v2 * volt * std::sin(a2 - alpha3) + p.b2 * p.v1 * volt * std::sin(alpha3) +
             p.b3 * p.v2 * volt * std::sin(alpha3 - a2);
    };
    const double expected = (flows(a3, v3) - flows(-0.3, 0.8)) / p.m1;
    CHECK(expected == doctest::Approx(p.b2 * p.v1 * (v3 * std::sin(a3) - 0.8 * std::sin(-0.3)) / p.m1));
    CHECK(initial_fluctuation(kOmega1, u, kPart, p) == doctest::Approx(expected).epsilon(1e-12));

    const double h = 1e-6;
    for (std::size_t j : {std::size_t{kOmega1}, std::size_t{kOmega2}}) {
      const Vector5 g = initial_fluctuation_gradient(j, u, kPart, p);
      for (std::size_t k = 0; k < kStateDim; ++k) {
        StateVector up = u, um = u;
        up[k] += h;
        um[k] -= h;
        const double fd =
            (initial_fluctuation(j, up, kPart, p) - initial_fluctuation(j, um, kPart, p)) / (2 * h);
        CHECK(std::abs(fd - g[static_cast<Eigen::Index>(k)]) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("ensemble nodes sit at the anchor") {
  const auto& k = small_kernel();
  REQUIRE(k.ensemble.size() == 681);
  for (const auto& u : k.ensemble.nodes()) {
    CHECK(u.alpha3() == -0.3);
    CHECK(u.v3() == 0.8);
  }
  CHECK(k.ensemble.samples() == 401);
  const Trajectory t = k.ensemble.trajectory(5);
  CHECK(t.size() == 401);
  CHECK(t.dt() == k.dt);
}

TEST_CASE("kernel table invariants") {
  const auto& k = small_kernel();
  const KernelTables& t = k.tables;
  const auto n = static_cast<Eigen::Index>(k.basis.size());
  CHECK(t.samples() == 401);
  CHECK(t.horizon() == doctest::Approx(0.02));
  CHECK((t.gamma.matrix(0) - RowMatrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((t.gamma.matrix(0) - gram_matrix(k.basis, k.rule)).cwiseAbs().maxCoeff() <= 1e-14);

  // the alpha2 row vanishes analytically; numerically it is rounding of the other rows
  const double fs = max_abs(t.f), bs = max_abs(t.b), ms = max_abs(t.memory_matrix);
  for (std::size_t s = 0; s < t.samples(); ++s) {
    for (Eigen::Index mu = 0; mu < n; ++mu) {
      CHECK(std::abs(t.f.at(s, 2, static_cast<std::size_t>(mu))) <= 1e-12 * fs);
      CHECK(std::abs(t.b.at(s, 2, static_cast<std::size_t>(mu))) <= 1e-12 * bs);
      CHECK(std::abs(t.memory_matrix.at(s, 2, static_cast<std::size_t>(mu))) <= 1e-12 * ms);
    }
  }
  CHECK(t.b.matrix(0) == t.f.matrix(0));
  CHECK(max_abs(MatrixSeries(1, 3, 4)) == 0.0);
  CHECK(t.memory_matrix.matrix(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(volterra_residual(t.b, t.f, t.g, t.dt_k) <= 1e-10 * std::max(1.0, max_abs(t.f)));
}

TEST_CASE("f at t = 0 is the projection of L F_j at the nodes") {
  const auto& k = small_kernel();
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> samples;
    for (const auto& u : k.ensemble.nodes()) {
      auto grad = [&](const StateVector& s) { return initial_fluctuation_gradient(j, s, kPart, k.params); };
      samples.push_back(liouville_apply(grad, u, k.params));
    }
    const Eigen::VectorXd c = finite_rank_project(samples, k.basis, k.rule);
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    for (std::size_t mu = 0; mu < k.basis.size(); ++mu)
      CHECK(std::abs(k.tables.f.at(0, j, mu) - c[static_cast<Eigen::Index>(mu)]) <= 1e-12 * scale);
  }
}

TEST_CASE("g is the time derivative of gamma") {
  const auto& k = small_kernel();
  const KernelTables& t = k.tables;
  // degree-one basis functions are linear and the ensemble steps with Euler, so
  // the forward difference of gamma reproduces g up to rounding
  double worst = 0.0, scale = 0.0, worst_central = 0.0;
  for (std::size_t n = 0; n + 1 < t.samples(); ++n) {
    const RowMatrix fwd = (t.gamma.matrix(n + 1) - t.gamma.matrix(n)) / t.dt_k;
    worst = std::max(worst, (fwd - t.g.matrix(n)).cwiseAbs().maxCoeff());
    scale = std::max(scale, t.g.matrix(n).cwiseAbs().maxCoeff());
    if (n > 0) {
      const RowMatrix central = (t.gamma.matrix(n + 1) - t.gamma.matrix(n - 1)) / (2 * t.dt_k);
      worst_central = std::max(worst_central, (central - t.g.matrix(n)).cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst <= 1e-8 * scale);
  CHECK(worst_central <= 0.2 * scale);
}

TEST_CASE("f is the time derivative of the projected fluctuation") {
  const auto& k = small_kernel();
  const std::size_t ns = k.tables.samples(), kk = k.basis.size();
  // e_j^mu(t) = E[F_j(u(t), 0) h^mu(u0)]
  std::vector<double> e(ns * kk, 0.0);
  for (std::size_t q = 0; q < k.ensemble.size(); ++q) {
    const Eigen::VectorXd h = k.basis.evaluate_all(k.rule.node(q));
    k.ensemble.propagate(q, [&](std::size_t n, const StateVector& u) {
      const double fj = initial_fluctuation(kOmega1, u, kPart, k.params);
      for (std::size_t mu = 0; mu < kk; ++mu) e[n * kk + mu] += k.rule.weights[q] * fj * h[static_cast<Eigen::Index>(mu)];
    });
  }
  double worst = 0.0, scale = 0.0;
  // forward differences match the Euler ensemble; the fast transient at the first steps
  // spoils central ones
  for (std::size_t n = 0; n + 1 < ns; ++n) {
    for (std::size_t mu = 0; mu < kk; ++mu) {
      const double fd = (e[(n + 1) * kk + mu] - e[n * kk + mu]) / k.tables.dt_k;
      worst = std::max(worst, std::abs(fd - k.tables.f.at(n, 0, mu)));
      scale = std::max(scale, std::abs(k.tables.f.at(n, 0, mu)));
    }
  }
  CHECK(worst <= 1e-3 * scale);
}

TEST_CASE("Volterra trivial cases") {
  RowMatrix f(2, 3);
  f << 1, 2, 3, 4, 5, 6;
  const MatrixSeries fs = constant_series(50, f);
  const MatrixSeries g0(50, 3, 3);
  CHECK(solve_volterra(fs, g0, 0.01) == fs);

  const MatrixSeries fz(50, 2, 3);
  RowMatrix g(3, 3);
  g << 1, 0.2, 0, 0.1, 2, 0.3, 0, 0.4, 3;
  CHECK(max_abs(solve_volterra(fz, constant_series(50, g), 0.01)) == 0.0);
}

TEST_CASE("Volterra scalar case converges at second order") {
  const double c = 1.7, t_end = 2.0;
  auto error = [&](double dt) {
    const std::size_t n = step_count(t_end, dt) + 1;
    const MatrixSeries b = solve_volterra(scalar_series(n, 1.0), scalar_series(n, c), dt);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(b.at(i, 0, 0) - std::exp(-c * static_cast<double>(i) * dt)));
    CHECK(volterra_residual(b, scalar_series(n, 1.0), scalar_series(n, c), dt) <= 1e-10);
    return worst;
  };
  const double e1 = error(0.02), e2 = error(0.01), e3 = error(0.005);
  CHECK(e1 < 1e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Volterra matrix case matches the matrix exponential") {
  // b' = -b C with b(0) = f for constant f and g = C
  RowMatrix c(3, 3);
  c << 2.0, 0.5, 0.1, 0.5, 1.0, 0.2, 0.1, 0.2, 0.5;
  RowMatrix f(2, 3);
  f << 1.0, -0.5, 0.25, 0.3, 0.7, -1.1;
  const double dt = 1e-3;
  const std::size_t n = 1001;
  const MatrixSeries b = solve_volterra(constant_series(n, f), constant_series(n, c), dt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; i += 50) {
    const double t = static_cast<double>(i) * dt;
    const Eigen::MatrixXd expm = eig.eigenvectors() * (-t * eig.eigenvalues().array()).exp().matrix().asDiagonal() *
                                 eig.eigenvectors().transpose();
    worst = std::max(worst, (b.matrix(i) - f * expm).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("Volterra reports a singular step matrix") {
  const double dt = 0.1;
  try {
    solve_volterra(scalar_series(10, 1.0), scalar_series(10, -2.0 / dt), dt);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.time_index() == 1);
  }
}

TEST_CASE("memory matrix of the scalar analytic case") {
  const double c = 0.8, t_end = 2.0;
  auto error = [&](double dt) {
    const std::size_t n = step_count(t_end, dt) + 1;
    const MatrixSeries b = solve_volterra(scalar_series(n, 1.0), scalar_series(n, c), dt);
    const MatrixSeries m = assemble_memory_matrix(b, scalar_series(n, 1.0), dt);
    CHECK(m.at(0, 0, 0) == 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      worst = std::max(worst, std::abs(m.at(i, 0, 0) - (1 - std::exp(-c * t)) / c));
    }
    return worst;
  };
  const double e1 = error(0.02), e2 = error(0.01);
  CHECK(e1 < 1e-3);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("memory matrix with identity gamma is the cumulative trapezoid of b") {
  const std::size_t n = 200;
  const double dt = 0.01;
  MatrixSeries b(n, 2, 3);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 3; ++c) b.at(i, r, c) = std::sin(0.1 * i + r + 2.0 * c);
  const MatrixSeries gamma = constant_series(n, RowMatrix::Identity(3, 3));
  const MatrixSeries m = assemble_memory_matrix(b, gamma, dt);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      double cum = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        cum += 0.5 * dt * (b.at(i - 1, r, c) + b.at(i, r, c));
        CHECK(m.at(i, r, c) == doctest::Approx(cum).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("truncated memory matrix equals the literal double sum") {
  const std::size_t n = 120, rows = 2, k = 3;
  const double dt = 0.01;
  std::mt19937 rng(6);
  std::normal_distribution<double> nd;
  MatrixSeries b(n, rows, k), gamma(n, k, k);
  for (double& v : b.raw()) v = nd(rng);
  for (double& v : gamma.raw()) v = nd(rng);
  for (std::size_t mem : {std::size_t{0}, std::size_t{1}, std::size_t{17}, std::size_t{60}, std::size_t{500}}) {
    const MatrixSeries m = assemble_memory_matrix(b, gamma, dt, mem);
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t top = std::min(t, mem);
      for (std::size_t j = 0; j < rows; ++j) {
        for (std::size_t mu = 0; mu < k; ++mu) {
          double s = 0.0;
          for (std::size_t i = 0; i <= top; ++i) {
            const double w = (i == 0 || i == top) ? 0.5 : 1.0;
            for (std::size_t nu = 0; nu < k; ++nu) s += w * b.at(i, j, nu) * gamma.at(t - i, nu, mu);
          }
          s = top == 0 ? 0.0 : s * dt;
          CHECK(m.at(t, j, mu) == doctest::Approx(s).epsilon(1e-12).scale(1.0));
        }
      }
      const RowMatrix single = memory_matrix_at(b, gamma, dt, t, mem);
      CHECK((single - m.matrix(t)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("kernel diagnostics average the last fifth of the horizon") {
  const HermiteBasis basis = basis_for(2);
  const std::size_t n = 101, k = basis.size();
  MatrixSeries b(n, 3, k);
  const std::size_t c100 = basis.position({1, 0, 0}), c010 = basis.position({0, 1, 0}),
                    c001 = basis.position({0, 0, 1});
  for (std::size_t i = 0; i < n; ++i) {
    const double late = i >= 80 ? 1.0 : 0.0;
    b.at(i, 0, c100) = late * -0.05 + (1 - late) * 3.0;
    b.at(i, 0, c010) = late * 0.05;
    b.at(i, 0, c001) = late * (i % 2 ? -0.004 : -0.006);
  }
  const KernelPlateaus d = kernel_diagnostics(b, basis, 0.01);
  CHECK(d.window_start == doctest::Approx(0.8));
  CHECK(d.b100 == doctest::Approx(-0.05));
  CHECK(d.b010 == doctest::Approx(0.05));
  CHECK(d.b001 == doctest::Approx((11 * -0.006 + 10 * -0.004) / 21.0));
  CHECK(d.antisymmetry_ratio == doctest::Approx(-1.0));
  CHECK_THROWS_AS(kernel_diagnostics(b, basis_for(0), 0.01), UsageError);
}

TEST_CASE("ensemble failures name the node") {
  const HermiteBasis basis = basis_for(1);
  const QuadratureRule rule = build_quadrature(basis, 3);
  // anchor voltage close to zero: the first Euler step drives V3 negative
  const Partition part = Partition::three_bus(-0.3, 1e-4);
  const EnsembleRun ensemble(rule, part, GridParams(), 1e-2, 0.1);
  try {
    compute_tables(ensemble, basis, rule);
    FAIL("expected KernelError");
  } catch (const KernelError& e) {
    CHECK(e.node() < rule.size());
  }
}

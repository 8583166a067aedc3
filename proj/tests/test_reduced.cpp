#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "mzgrid/errors.hpp"
#include "mzgrid/reduced.hpp"

using namespace mzgrid;

namespace {

const Partition kPart = Partition::three_bus(-0.3, 0.8);
const Eigen::Vector2d kAnchor(-0.3, 0.8);
const Eigen::Vector3d kU0(0.0, 0.0, -0.16);

HermiteBasis basis_for(int order) { return HermiteBasis(order, {0.0, 0.0, -0.16}, {0.01, 0.01, 0.01}); }

struct Fixture {
  HermiteBasis basis = basis_for(1);
  GridParams params;
  KernelTables tables;
  Fixture() {
    const QuadratureRule rule = build_quadrature(basis, 7);
    tables = build_kernel(params, kPart, basis, rule, 5e-5, 0.05);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

KernelTables zero_tables(std::size_t samples, double dt_k, std::size_t k) {
  KernelTables t;
  t.dt_k = dt_k;
  t.f = MatrixSeries(samples, 3, k);
  t.g = MatrixSeries(samples, k, k);
  t.gamma = MatrixSeries(samples, k, k);
  t.b = MatrixSeries(samples, 3, k);
  t.memory_matrix = MatrixSeries(samples, 3, k);
  return t;
}

ReducedConfig config(double dt, double t_end, MemorySpec mem, MemoryScheme scheme = MemoryScheme::kExplicit) {
  ReducedConfig c;
  c.dt = dt;
  c.t_end = t_end;
  c.memory = mem;
  c.scheme = scheme;
  c.basis_order = 1;
  c.output_stride = 1;
  return c;
}

}  // namespace

TEST_CASE("Markovian right-hand side") {
  const GridParams p;
  CHECK(markovian_rhs({0, 0, 0.4}, p, kAnchor)[2] == 0.0);
  const Vector5 r0 = rhs(default_initial_state(), p);
  const Eigen::Vector3d m0 = markovian_rhs(kU0, p, kAnchor);
  for (int j = 0; j < 3; ++j) CHECK(m0[j] == doctest::Approx(r0[j]).epsilon(1e-14));

  std::mt19937 rng(12);
  std::uniform_real_distribution<double> a(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Vector3d u(a(rng), a(rng), a(rng));
    const Vector5 full = rhs(lift(u, kPart), p);
    const Eigen::Vector3d m = markovian_rhs(u, p, kAnchor);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(m[j] - full[j]) <= 1e-12 * std::max(1.0, std::abs(full[j])));
  }
}

TEST_CASE("memory forcing basics") {
  const auto& fx = fixture();
  const Eigen::VectorXd h0 = fx.basis.evaluate_all({kU0.data(), 3});
  for (const MemorySpec& m : {MemorySpec::infinite(), MemorySpec::none(), MemorySpec::finite(0.01)})
    CHECK(memory_forcing(0.0, fx.tables, h0, m).cwiseAbs().maxCoeff() == 0.0);
  for (double t : {0.0, 0.013, 0.05}) {
    CHECK(memory_forcing(t, fx.tables, h0, MemorySpec::none()).cwiseAbs().maxCoeff() == 0.0);
    for (const MemorySpec& m : {MemorySpec::infinite(), MemorySpec::finite(0.01)}) {
      // alpha2 row vanishes up to rounding of the omega rows
      const Eigen::Vector3d f = memory_forcing(t, fx.tables, h0, m);
      CHECK(std::abs(f[2]) <= 1e-12 * std::max(1.0, f.head<2>().cwiseAbs().maxCoeff()));
    }
  }
  CHECK(std::abs(memory_forcing(0.03, fx.tables, h0, MemorySpec::infinite())[0]) > 0.0);
  CHECK_THROWS_AS(memory_forcing(0.06, fx.tables, h0, MemorySpec::infinite()), UsageError);

  // sampled forcing matches the direct evaluation on and off the grid
  const MemoryForcing forcing(fx.tables, h0, MemorySpec::finite(0.01));
  for (double t : {0.0, 0.005, 0.0123456, 0.03, 0.05})
    CHECK((forcing.at(t) - memory_forcing(t, fx.tables, h0, MemorySpec::finite(0.01))).norm() <= 1e-12);
  // truncation is inactive up to t_memory
  const MemoryForcing inf(fx.tables, h0, MemorySpec::infinite());
  CHECK(forcing.at(0.01) == inf.at(0.01));
  CHECK(forcing.at(0.02) != inf.at(0.02));
}

TEST_CASE("memory forcing is the memory matrix applied to h0") {
  const auto& fx = fixture();
  const Eigen::VectorXd h0 = fx.basis.evaluate_all({kU0.data(), 3});
  const std::size_t n = 600;
  const Eigen::Vector3d mem = memory_forcing(n * fx.tables.dt_k, fx.tables, h0, MemorySpec::infinite());
  const Eigen::Vector3d direct = fx.tables.memory_matrix.matrix(n) * h0;
  CHECK((mem - direct).norm() <= 1e-12 * direct.norm());
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(config(5e-5, 1.0, MemorySpec::infinite()).validate(2.0));
  CHECK_THROWS_AS(config(5e-5, 3.0, MemorySpec::infinite()).validate(2.0), ConfigError);
  CHECK_NOTHROW(config(5e-5, 3.0, MemorySpec::none()).validate(2.0));
  CHECK_THROWS_AS(config(5e-5, 1.0, MemorySpec::finite(2.5)).validate(2.0), ConfigError);
  CHECK_THROWS_AS(config(0.0, 1.0, MemorySpec::none()).validate(2.0), ConfigError);
  CHECK(MemorySpec::finite(0.25).label() == "tmem0.25");
  CHECK(MemorySpec::none().label() == "none");
}

TEST_CASE("schemes on zero tables reduce to Euler on the Markovian system") {
  const GridParams p;
  const HermiteBasis basis = basis_for(1);
  const KernelTables zero = zero_tables(2001, 1e-4, basis.size());
  const Trajectory ex = simulate_reduced(kU0, config(1e-4, 0.2, MemorySpec::infinite()), zero, basis, p, kPart);
  const Trajectory im = simulate_reduced(kU0, config(1e-4, 0.2, MemorySpec::infinite(), MemoryScheme::kImplicit),
                                         zero, basis, p, kPart);
  Eigen::Vector3d u = kU0;
  for (std::size_t n = 0; n < ex.size(); ++n) {
    for (int j = 0; j < 3; ++j) {
      CHECK(ex.value(n, j) == u[j]);
      CHECK(im.value(n, j) == u[j]);
    }
    u += 1e-4 * markovian_rhs(u, p, kAnchor);
  }
}

TEST_CASE("single steps") {
  const auto& fx = fixture();
  const GridParams& p = fx.params;
  const Eigen::VectorXd h0 = fx.basis.evaluate_all({kU0.data(), 3});
  const ReducedConfig cfg = config(5e-5, 0.05, MemorySpec::infinite());
  const MemoryForcing forcing(fx.tables, h0, cfg.memory);
  const ReducedState s0{kU0, h0};

  const ReducedState ex = step_reduced_explicit(s0, 0.0, cfg, forcing, p, kAnchor);
  const ReducedState im = step_reduced_implicit(s0, 0.0, cfg, forcing, p, kAnchor);
  const Eigen::Vector3d markov = markovian_rhs(kU0, p, kAnchor);
  CHECK((ex.u_hat - (kU0 + cfg.dt * markov)).norm() == 0.0);
  CHECK(ex.u_hat[2] == kU0[2] + cfg.dt * markov[2]);
  const Eigen::Vector3d m1 = fx.tables.memory_matrix.matrix(1) * h0;
  CHECK((im.u_hat - ex.u_hat - cfg.dt * m1).norm() <= 1e-15);
  CHECK(im.u_hat[2] == ex.u_hat[2]);
  CHECK(ex.h0 == h0);
}

TEST_CASE("explicit scheme equals the literal double sum") {
  const auto& fx = fixture();
  const GridParams& p = fx.params;
  const KernelTables& t = fx.tables;
  const Eigen::VectorXd h0 = fx.basis.evaluate_all({kU0.data(), 3});
  const double dt = t.dt_k;
  const std::size_t steps = 400, k = fx.basis.size();
  const Trajectory traj = simulate_reduced(kU0, config(dt, steps * dt, MemorySpec::infinite()), t, fx.basis, p, kPart);

  Eigen::Vector3d u = kU0;
  for (std::size_t n = 0; n < steps; ++n) {
    Eigen::Vector3d mem = Eigen::Vector3d::Zero();
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        for (std::size_t nu = 0; nu < k; ++nu)
          for (std::size_t mu = 0; mu < k; ++mu)
            s += w * t.b.at(i, j, nu) * t.gamma.at(n - i, nu, mu) * h0[static_cast<Eigen::Index>(mu)];
      }
      mem[static_cast<Eigen::Index>(j)] = n == 0 ? 0.0 : dt * s;
    }
    u += dt * (markovian_rhs(u, p, kAnchor) + mem);
    for (int j = 0; j < 3; ++j)
      CHECK(traj.value(n + 1, j) == doctest::Approx(u[j]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("finite memory is bitwise identical to infinite memory up to t_memory") {
  const auto& fx = fixture();
  const Trajectory inf =
      simulate_reduced(kU0, config(5e-5, 0.05, MemorySpec::infinite()), fx.tables, fx.basis, fx.params, kPart);
  const Trajectory fin =
      simulate_reduced(kU0, config(5e-5, 0.05, MemorySpec::finite(0.02)), fx.tables, fx.basis, fx.params, kPart);
  for (std::size_t n = 0; n < inf.size(); ++n) {
    const bool before = inf.time(n) <= 0.02 + 1e-12;
    for (std::size_t c = 0; c < 3; ++c) {
      if (before) CHECK(inf.value(n, c) == fin.value(n, c));
    }
  }
  CHECK(inf.value(inf.size() - 1, 0) != fin.value(fin.size() - 1, 0));
}

TEST_CASE("memory forcing depends on t and h0 only") {
  const auto& fx = fixture();
  const Trajectory ex =
      simulate_reduced(kU0, config(5e-5, 0.05, MemorySpec::infinite()), fx.tables, fx.basis, fx.params, kPart);
  const Trajectory ex_coarse =
      simulate_reduced(kU0, config(1e-4, 0.05, MemorySpec::infinite()), fx.tables, fx.basis, fx.params, kPart);
  for (std::size_t n = 0; n < ex_coarse.size(); ++n)
    for (std::size_t c = 3; c < 6; ++c) CHECK(ex_coarse.value(n, c) == ex.value(2 * n, c));
  for (std::size_t n = 0; n < ex.size(); ++n)
    CHECK(std::abs(ex.value(n, 5)) <= 1e-12 * std::max({1.0, std::abs(ex.value(n, 3)), std::abs(ex.value(n, 4))}));
}

TEST_CASE("reduced trajectories converge at first order") {
  const auto& fx = fixture();
  auto end_state = [&](double dt) {
    const Trajectory t =
        simulate_reduced(kU0, config(dt, 0.05, MemorySpec::infinite()), fx.tables, fx.basis, fx.params, kPart);
    const auto r = t.row(t.size() - 1);
    return Eigen::Vector3d(r[0], r[1], r[2]);
  };
  const Eigen::Vector3d a = end_state(4e-4), b = end_state(2e-4), c = end_state(1e-4);
  CHECK((a - b).norm() / (b - c).norm() == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("reduced run rejects a horizon beyond the tables") {
  const auto& fx = fixture();
  CHECK_THROWS_AS(
      simulate_reduced(kU0, config(5e-5, 0.1, MemorySpec::infinite()), fx.tables, fx.basis, fx.params, kPart),
      ConfigError);
  CHECK_NOTHROW(simulate_reduced(kU0, config(5e-5, 0.1, MemorySpec::none()), fx.tables, fx.basis, fx.params, kPart));
  ReducedConfig wrong = config(5e-5, 0.05, MemorySpec::infinite());
  wrong.basis_order = 2;
  CHECK_THROWS_AS(simulate_reduced(kU0, wrong, fx.tables, fx.basis, fx.params, kPart), ConfigError);
}

TEST_CASE("trajectory comparison") {
  Trajectory a(0.1, {"x", "y"});
  for (int i = 0; i < 11; ++i) {
    const double r[2] = {std::sin(0.1 * i), std::cos(0.1 * i)};
    a.push_back(r);
  }
  const ErrorReport same = compare_trajectories(a, a, {"x", "y"});
  CHECK(same.at("x").sup == 0.0);
  CHECK(same.at("y").relative_l2 == 0.0);
  CHECK(same.bounded);

  Trajectory b(0.1, {"x", "y"});
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r[2] = {a.value(i, 0), a.value(i, 1) + 0.25};
    b.push_back(r);
  }
  const ErrorReport off = compare_trajectories(a, b, {"x", "y"});
  CHECK(off.at("x").sup == 0.0);
  CHECK(off.at("y").sup == doctest::Approx(0.25));
  CHECK(sup_error_until(a, b, {"y"}, 0.5) == doctest::Approx(0.25));

  Trajectory fine(0.05, {"x", "y"});
  for (int i = 0; i < 21; ++i) {
    const double r[2] = {std::sin(0.05 * i), std::cos(0.05 * i)};
    fine.push_back(r);
  }
  CHECK(compare_trajectories(a, fine, {"x", "y"}).at("x").sup <= 1e-15);
  Trajectory odd(0.03, {"x", "y"});
  odd.push_back(std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(compare_trajectories(a, odd, {"x"}), UsageError);
  CHECK_THROWS_AS(compare_trajectories(a, a, {"z"}), UsageError);

  Trajectory wild(0.1, {"x", "y"});
  for (std::size_t i = 0; i < a.size(); ++i) wild.push_back(std::vector<double>{100.0, 0.0});
  CHECK_FALSE(compare_trajectories(a, wild, {"x"}).bounded);
}

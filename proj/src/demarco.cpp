#include "mzgrid/demarco.hpp"

#include <cmath>
#include <string>

#include "mzgrid/errors.hpp"

namespace mzgrid {
namespace {

void require_positive_voltage(const StateVector& u) {
  if (!(u.v3() > 0.0)) {
    throw DomainError("V3 must be positive, got " + std::to_string(u.v3()));
  }
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string("grid parameter ") + name + " must be positive and finite, got " +
                      std::to_string(value));
  }
}

}  // namespace

const std::vector<std::string>& state_labels() {
  static const std::vector<std::string> labels{"omega1", "omega2", "alpha2", "alpha3", "v3"};
  return labels;
}

StateVector default_initial_state() { return {0.0, 0.0, -0.16, -0.3, 0.8}; }

void GridParams::validate() const {
  require_positive(m1, "m1");
  require_positive(m2, "m2");
  require_positive(d1, "d1");
  require_positive(d2, "d2");
  require_positive(d3, "d3");
  require_positive(epsilon, "epsilon");
  require_positive(v1, "v1");
  require_positive(v2, "v2");
  for (double v : {b1, b2, b3, p2, p3, q3}) {
    if (!std::isfinite(v)) throw ConfigError("grid parameters must be finite");
  }
}

double energy(const StateVector& u, const GridParams& p) {
  require_positive_voltage(u);
  const double w1 = u.omega1(), w2 = u.omega2(), a2 = u.alpha2(), a3 = u.alpha3(), v3 = u.v3();
  return 0.5 * p.m1 * w1 * w1 + 0.5 * p.m2 * w2 * w2 + 0.5 * (p.b1 + p.b2) * p.v1 * p.v1 +
         0.5 * (p.b1 + p.b3) * p.v2 * p.v2 + 0.5 * (p.b2 + p.b3) * v3 * v3 -
         p.b1 * p.v1 * p.v2 * std::cos(a2) - p.b2 * p.v1 * v3 * std::cos(a3) -
         p.b3 * p.v2 * v3 * std::cos(a3 - a2) + p.p2 * a2 + p.p3 * a3 + p.q3 * std::log(v3);
}

Vector5 gradient(const StateVector& u, const GridParams& p) {
  require_positive_voltage(u);
  const double a2 = u.alpha2(), a3 = u.alpha3(), v3 = u.v3();
  Vector5 g;
  g[kOmega1] = p.m1 * u.omega1();
  g[kOmega2] = p.m2 * u.omega2();
  g[kAlpha2] = p.b1 * p.v1 * p.v2 * std::sin(a2) + p.b3 * p.v2 * v3 * std::sin(a2 - a3) + p.p2;
  g[kAlpha3] = p.b2 * p.v1 * v3 * std::sin(a3) + p.b3 * p.v2 * v3 * std::sin(a3 - a2) + p.p3;
  g[kV3] = (p.b2 + p.b3) * v3 - p.b2 * p.v1 * std::cos(a3) - p.b3 * p.v2 * std::cos(a3 - a2) +
           p.q3 / v3;
  return g;
}

Matrix5 hessian(const StateVector& u, const GridParams& p) {
  require_positive_voltage(u);
  const double a2 = u.alpha2(), a3 = u.alpha3(), v3 = u.v3();
  const double c23 = std::cos(a2 - a3), s23 = std::sin(a2 - a3);
  Matrix5 h = Matrix5::Zero();
  h(kOmega1, kOmega1) = p.m1;
  h(kOmega2, kOmega2) = p.m2;
  h(kAlpha2, kAlpha2) = p.b1 * p.v1 * p.v2 * std::cos(a2) + p.b3 * p.v2 * v3 * c23;
  h(kAlpha2, kAlpha3) = h(kAlpha3, kAlpha2) = -p.b3 * p.v2 * v3 * c23;
  h(kAlpha2, kV3) = h(kV3, kAlpha2) = p.b3 * p.v2 * s23;
  h(kAlpha3, kAlpha3) = p.b2 * p.v1 * v3 * std::cos(a3) + p.b3 * p.v2 * v3 * c23;
  h(kAlpha3, kV3) = h(kV3, kAlpha3) = p.b2 * p.v1 * std::sin(a3) - p.b3 * p.v2 * s23;
  h(kV3, kV3) = (p.b2 + p.b3) - p.q3 / (v3 * v3);
  return h;
}

Matrix5 assemble_matrix_a(const GridParams& p) {
  p.validate();
  Matrix5 a = Matrix5::Zero();
  a(0, 0) = -p.d1 / (p.m1 * p.m1);
  a(0, 2) = 1.0 / p.m1;
  a(0, 3) = 1.0 / p.m1;
  a(1, 1) = -p.d2 / (p.m2 * p.m2);
  a(1, 2) = -1.0 / p.m2;
  a(2, 0) = -1.0 / p.m1;
  a(2, 1) = 1.0 / p.m2;
  a(3, 0) = -1.0 / p.m1;
  a(3, 3) = -1.0 / p.d3;
  a(4, 4) = -1.0 / p.epsilon;
  return a;
}

Vector5 rhs(const StateVector& u, const GridParams& p) {
  require_positive_voltage(u);
  const double w1 = u.omega1(), w2 = u.omega2(), a2 = u.alpha2(), a3 = u.alpha3(), v3 = u.v3();
  const double a11 = -p.d1 / (p.m1 * p.m1), a13 = 1.0 / p.m1, a14 = 1.0 / p.m1;
  const double a22 = -p.d2 / (p.m2 * p.m2), a23 = -1.0 / p.m2;
  const double a31 = -1.0 / p.m1, a32 = 1.0 / p.m2;
  const double a41 = -1.0 / p.m1, a44 = -1.0 / p.d3;
  const double a55 = -1.0 / p.epsilon;

  const double flow2 = p.b1 * p.v1 * p.v2 * std::sin(a2) + p.b3 * p.v2 * v3 * std::sin(a2 - a3) + p.p2;
  const double flow3 = p.b2 * p.v1 * v3 * std::sin(a3) + p.b3 * p.v2 * v3 * std::sin(a3 - a2) + p.p3;
  const double reactive = (p.b2 + p.b3) * v3 - p.b2 * p.v1 * std::cos(a3) -
                          p.b3 * p.v2 * std::cos(a3 - a2) + p.q3 / v3;
  Vector5 r;
  r[0] = a11 * p.m1 * w1 + a13 * flow2 + a14 * flow3;
  r[1] = a22 * p.m2 * w2 + a23 * flow2;
  r[2] = a31 * p.m1 * w1 + a32 * p.m2 * w2;
  r[3] = a41 * p.m1 * w1 + a44 * flow3;
  r[4] = a55 * reactive;
  return r;
}

Matrix5 rhs_jacobian(const StateVector& u, const GridParams& p) {
  return assemble_matrix_a(p) * hessian(u, p);
}

double dissipation_rate(const StateVector& u, const GridParams& p) {
  const Vector5 g = gradient(u, p);
  return g.dot(assemble_matrix_a(p) * g);
}

double fixed_point_residual(const StateVector& u, const GridParams& p) { return gradient(u, p).norm(); }

StateVector step_euler(const StateVector& u, const GridParams& p, double dt, double t) {
  if (!(dt > 0.0)) throw UsageError("dt must be positive");
  StateVector next(u.x + dt * rhs(u, p).eval());
  if (!next.all_finite()) throw IntegrationError("non-finite state after Euler step", t + dt);
  if (!(next.v3() > 0.0)) throw IntegrationError("load voltage V3 became non-positive", t + dt);
  return next;
}

Trajectory simulate_full(const StateVector& u0, const GridParams& p, double dt, double t_end,
                         std::size_t stride) {
  if (!(dt > 0.0)) throw UsageError("dt must be positive");
  if (t_end < 0.0) throw UsageError("t_end must be non-negative");
  if (stride == 0) throw UsageError("stride must be >= 1");
  p.validate();
  require_positive_voltage(u0);

  const std::size_t steps = step_count(t_end, dt);
  Trajectory traj(dt * static_cast<double>(stride), state_labels());
  traj.reserve(steps / stride + 1);
  StateVector u = u0;
  traj.push_back({u.x.data(), kStateDim});
  for (std::size_t n = 0; n < steps; ++n) {
    u = step_euler(u, p, dt, static_cast<double>(n) * dt);
    if ((n + 1) % stride == 0) traj.push_back({u.x.data(), kStateDim});
  }
  return traj;
}

ThreeBusModel::ThreeBusModel(GridParams params) : params_(params), a_(assemble_matrix_a(params)) {}

double ThreeBusModel::energy(const Eigen::VectorXd& u) const {
  if (u.size() != 5) throw UsageError("3-bus state must have 5 components");
  return mzgrid::energy(StateVector(Vector5(u)), params_);
}

Eigen::VectorXd ThreeBusModel::gradient(const Eigen::VectorXd& u) const {
  if (u.size() != 5) throw UsageError("3-bus state must have 5 components");
  return mzgrid::gradient(StateVector(Vector5(u)), params_);
}

}  // namespace mzgrid

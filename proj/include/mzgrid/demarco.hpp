#pragma once

// DeMarco swing/load dynamics for the 3-bus grid: du/dt = A grad Phi(u).

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "mzgrid/trajectory.hpp"

namespace mzgrid {

inline constexpr std::size_t kStateDim = 5;

using Vector5 = Eigen::Matrix<double, 5, 1>;
using Matrix5 = Eigen::Matrix<double, 5, 5>;

/// Position of each variable inside a 3-bus state vector.
enum StateIndex : std::size_t { kOmega1 = 0, kOmega2 = 1, kAlpha2 = 2, kAlpha3 = 3, kV3 = 4 };

/// u = (omega1, omega2, alpha2, alpha3, V3). Angles in rad, V3 in p.u.
struct StateVector {
  Vector5 x = Vector5::Zero();

  StateVector() = default;
  StateVector(double omega1, double omega2, double alpha2, double alpha3, double v3) {
    x << omega1, omega2, alpha2, alpha3, v3;
  }
  explicit StateVector(const Vector5& values) : x(values) {}

  double omega1() const { return x[kOmega1]; }
  double omega2() const { return x[kOmega2]; }
  double alpha2() const { return x[kAlpha2]; }
  double alpha3() const { return x[kAlpha3]; }
  double v3() const { return x[kV3]; }

  double operator[](std::size_t i) const { return x[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return x[static_cast<Eigen::Index>(i)]; }

  bool all_finite() const { return x.allFinite(); }
  bool operator==(const StateVector& other) const { return x == other.x; }
};

/// Column names used in trajectories and CSV output.
const std::vector<std::string>& state_labels();

/// The initial condition used throughout the 3-bus experiments.
StateVector default_initial_state();

struct GridParams {
  double m1 = 0.052;
  double m2 = 0.0531;
  double d1 = 0.05;
  double d2 = 0.05;
  double d3 = 0.005;
  double b1 = 10.0;
  double b2 = 10.0;
  double b3 = 10.0;
  double p2 = -2.0;
  double p3 = 3.0;
  double q3 = 0.1;
  double epsilon = 5.0;
  double v1 = 0.9;
  double v2 = 0.9;

  /// Reference parameter set of the 3-bus study (the member defaults).
  static GridParams table1() { return {}; }

  /// Throws ConfigError unless masses, dampings, epsilon and fixed voltages are positive.
  void validate() const;

  bool operator==(const GridParams&) const = default;
};

/// Abstract gradient-system view of a grid model: du/dt = A grad Phi(u).
/// The general n-bus form stays abstract because its absorbed-power terms
/// have no closed form; ThreeBusModel is the concrete instance.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;
  virtual std::size_t dimension() const = 0;
  virtual double energy(const Eigen::VectorXd& u) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& u) const = 0;
  virtual Eigen::MatrixXd structure_matrix() const = 0;

  Eigen::VectorXd vector_field(const Eigen::VectorXd& u) const {
    return structure_matrix() * gradient(u);
  }
};

double energy(const StateVector& u, const GridParams& p);
Vector5 gradient(const StateVector& u, const GridParams& p);
/// Hessian of the energy; symmetric.
Matrix5 hessian(const StateVector& u, const GridParams& p);

/// 5x5 structure matrix; throws ConfigError for non-positive M, D or epsilon.
Matrix5 assemble_matrix_a(const GridParams& p);

/// (R1..R5) from the component formulas. Agrees with A * gradient(u).
Vector5 rhs(const StateVector& u, const GridParams& p);

/// d rhs / du = A * hessian(u).
Matrix5 rhs_jacobian(const StateVector& u, const GridParams& p);

/// grad Phi^T A grad Phi, the instantaneous energy change; never positive.
double dissipation_rate(const StateVector& u, const GridParams& p);

/// ||grad Phi(u)||_2, zero exactly at equilibria.
double fixed_point_residual(const StateVector& u, const GridParams& p);

/// One forward Euler step. Throws IntegrationError (carrying `t`) if the
/// new state has V3 <= 0 or is not finite.
StateVector step_euler(const StateVector& u, const GridParams& p, double dt, double t = 0.0);

/// floor(t_end/dt)+1 forward Euler states starting at u0; every `stride`-th
/// state is recorded.
Trajectory simulate_full(const StateVector& u0, const GridParams& p, double dt, double t_end,
                         std::size_t stride = 1);

class ThreeBusModel final : public EnergyModel {
 public:
  explicit ThreeBusModel(GridParams params);

  std::size_t dimension() const override { return kStateDim; }
  double energy(const Eigen::VectorXd& u) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& u) const override;
  Eigen::MatrixXd structure_matrix() const override { return a_; }

  const GridParams& params() const noexcept { return params_; }

 private:
  GridParams params_;
  Matrix5 a_;
};

}  // namespace mzgrid

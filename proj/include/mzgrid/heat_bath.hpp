#pragma once

// Particle in a potential U coupled linearly to n harmonic oscillators.
// Eliminating the bath gives the exact generalized Langevin equation
//   dx/dt = p/m,  dp/dt = -U'(x) - int_0^t K(s) p(t-s)/m ds + F_p(t)
// with K(t) = sum gamma_j^2/omega_j^2 cos(omega_j t).

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "mzgrid/trajectory.hpp"

namespace mzgrid {

struct BathParams {
  std::vector<double> gammas;
  std::vector<double> omegas;
  double mass = 1.0;
  std::function<double(double)> potential;
  std::function<double(double)> potential_derivative;

  /// gamma_j = 1/(j/3+1), omega_j = j for j = 1..n_osc, m = 1, U(x) = cos 2x.
  static BathParams defaults(std::size_t n_osc = 5);

  std::size_t n_osc() const noexcept { return gammas.size(); }
  /// Throws ConfigError on length mismatch, omega_j <= 0, m <= 0 or missing U.
  void validate() const;
};

struct FullBathState {
  double x = 0.0;
  double p = 0.0;
  std::vector<double> q;
  std::vector<double> pq;

  bool all_finite() const;
};

/// x = 0, p = 1, q_j = p_j = 1.
FullBathState bath_initial_state(std::size_t n_osc = 5);

/// Time derivative of the full particle + bath state.
FullBathState full_bath_rhs(const FullBathState& s, const BathParams& bp);

/// H_s + H_B = p^2/2m + U(x) + sum p_j^2/2 + omega_j^2/2 (q_j - gamma_j x/omega_j^2)^2.
double bath_hamiltonian(const FullBathState& s, const BathParams& bp);

/// Forward Euler on the full system. Columns t,x,p plus q1..qn, pq1..pqn when
/// include_bath is set.
Trajectory simulate_full_bath(const FullBathState& s0, const BathParams& bp, double dt, double t_end,
                              std::size_t stride = 1, bool include_bath = false);

double memory_kernel_K(double t, const BathParams& bp);

double noise_F_p(double t, const FullBathState& s0, const BathParams& bp);

/// Closed-form q_j(t) given the particle history x(0), x(dt), ... The
/// convolution int_0^t x(s) sin(omega_j (t-s)) ds uses the trapezoid rule.
/// t must be a multiple of dt covered by the history.
double bath_closed_form_q(double t, std::size_t j, std::span<const double> x_history, double dt,
                          const FullBathState& s0, const BathParams& bp);

struct ReducedParticleOptions {
  double t_memory = std::numeric_limits<double>::infinity();  // 0 gives the memoryless model
  bool use_kernel = true;
  bool use_noise = true;
};

/// Forward Euler on the reduced pair with the trapezoidal convolution over the
/// stored momentum history, truncated at t_memory. Columns t,x,p.
Trajectory simulate_reduced_particle(const FullBathState& s0, const BathParams& bp, double dt,
                                     double t_end, const ReducedParticleOptions& opts = {},
                                     std::size_t stride = 1);

}  // namespace mzgrid

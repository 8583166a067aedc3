#pragma once

// Reduced model for the resolved generator variables (omega1, omega2, alpha2):
//   d/dt u^(t) = R^(u^(t)) + int_0^{min(t, t_memory)} B(s) Gamma(t-s) ds h(u^_0)
// with the bracketed convolution precomputed as the memory matrix M(t).

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mzgrid/demarco.hpp"
#include "mzgrid/hermite.hpp"
#include "mzgrid/memory_kernel.hpp"
#include "mzgrid/projection.hpp"
#include "mzgrid/trajectory.hpp"

namespace mzgrid {

enum class MemoryMode { kInfinite, kFinite, kNone };

struct MemorySpec {
  MemoryMode mode = MemoryMode::kInfinite;
  double t_memory = 0.0;  // used by kFinite only

  static MemorySpec infinite() { return {MemoryMode::kInfinite, 0.0}; }
  static MemorySpec none() { return {MemoryMode::kNone, 0.0}; }
  static MemorySpec finite(double t_memory) { return {MemoryMode::kFinite, t_memory}; }

  std::string label() const;
};

enum class MemoryScheme {
  kExplicit,  // memory term at t_n
  kImplicit,  // memory term at t_{n+1}
};

struct ReducedConfig {
  double dt = 5e-5;
  double t_end = 2.0;
  MemorySpec memory;
  MemoryScheme scheme = MemoryScheme::kExplicit;
  int basis_order = 1;
  std::size_t output_stride = 1;

  /// Throws ConfigError on non-positive dt/t_end, or a finite memory longer
  /// than the kernel horizon.
  void validate(double kernel_horizon) const;
};

/// Resolved state plus the basis values at the initial resolved state, which
/// are fixed for the whole run.
struct ReducedState {
  Eigen::Vector3d u_hat;
  Eigen::VectorXd h0;
};

/// Markovian part with alpha3, V3 frozen at the anchor (alpha3^0, V3^0).
Eigen::Vector3d markovian_rhs(const Eigen::Vector3d& u_hat, const GridParams& p,
                              const Eigen::Vector2d& anchor);

/// Memory term M_j(t) . h0 for each resolved variable j. t must lie within the
/// table horizon; off-grid times are linearly interpolated between samples.
Eigen::Vector3d memory_forcing(double t, const KernelTables& tables, const Eigen::VectorXd& h0,
                               const MemorySpec& mode);

/// Memory forcing sampled once on the kernel grid for a fixed h0 and mode.
class MemoryForcing {
 public:
  MemoryForcing(const KernelTables& tables, const Eigen::VectorXd& h0, const MemorySpec& mode);

  Eigen::Vector3d at(double t) const;
  double horizon() const noexcept { return horizon_; }

 private:
  Eigen::Vector3d sample(std::size_t n) const;

  MemoryMode mode_;
  double dt_k_;
  double horizon_;
  std::size_t samples_;
  std::vector<double> series_;  // [n][j]
};

/// One step of size cfg.dt with the memory term taken at t_n.
ReducedState step_reduced_explicit(const ReducedState& state, double t_n, const ReducedConfig& cfg,
                                   const MemoryForcing& forcing, const GridParams& p,
                                   const Eigen::Vector2d& anchor);

/// One step of size cfg.dt with the memory term taken at t_{n+1}. The memory
/// term depends on h0 only, so no nonlinear solve is needed.
ReducedState step_reduced_implicit(const ReducedState& state, double t_n, const ReducedConfig& cfg,
                                   const MemoryForcing& forcing, const GridParams& p,
                                   const Eigen::Vector2d& anchor);

/// Reduced trajectory with columns omega1, omega2, alpha2, mem1, mem2, mem3 where
/// mem_j is the memory term at the sample time.
Trajectory simulate_reduced(const Eigen::Vector3d& u_hat0, const ReducedConfig& cfg,
                            const KernelTables& tables, const HermiteBasis& basis, const GridParams& p,
                            const Partition& part);

const std::vector<std::string>& reduced_labels();

struct VariableError {
  std::string name;
  double relative_l2 = 0.0;  // ||cand - ref||_2 / ||ref||_2
  double sup = 0.0;          // max |cand - ref|
};

struct ErrorReport {
  std::vector<VariableError> variables;
  bool bounded = true;  // candidate finite and within bound_factor * max |ref|

  const VariableError& at(const std::string& name) const;
};

/// Per-variable errors of `candidate` against `reference`. Trajectories on
/// grids whose spacings differ by an integer factor are compared on the
/// coarser grid; anything else is a UsageError.
ErrorReport compare_trajectories(const Trajectory& reference, const Trajectory& candidate,
                                 const std::vector<std::string>& vars, double bound_factor = 10.0);

/// max_{s <= t} |candidate - reference| over the listed variables (running sup error).
double sup_error_until(const Trajectory& reference, const Trajectory& candidate,
                       const std::vector<std::string>& vars, double t);

}  // namespace mzgrid

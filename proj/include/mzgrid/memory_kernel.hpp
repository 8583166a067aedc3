#pragma once

// Memory kernel construction for the Mori-Zwanzig reduced 3-bus model.
//
// With F_j(u,0) = R_j(u) - R_j(Pu) the initial orthogonal fluctuation of
// resolved variable j, the tables are ensemble averages over the Gaussian
// quadrature measure of the resolved initial conditions:
//
//   f_j^mu(t)    = ( L e^{tL} F_j(u0,0), h^mu(u0^) )
//   g^{nu,mu}(t) = ( L e^{tL} h^nu(u0^), h^mu(u0^) )
//   gamma^{nu,mu}(t) = ( e^{tL} h^nu(u0^), h^mu(u0^) )
//
// where L G(u(t)) = sum_r R_r(u(t)) dG/du_r(u(t)). The kernel coefficients
// solve b_j^mu(t) = f_j^mu(t) - int_0^t sum_nu b_j^nu(s) g^{nu,mu}(t-s) ds and
// the memory matrix is M_j^mu(t) = int_0^t sum_nu b_j^nu(s) gamma^{nu,mu}(t-s) ds.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "mzgrid/demarco.hpp"
#include "mzgrid/hermite.hpp"
#include "mzgrid/projection.hpp"
#include "mzgrid/quadrature.hpp"

namespace mzgrid {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Sequence of equally sized row-major matrices, one per time sample.
class MatrixSeries {
 public:
  MatrixSeries() = default;
  MatrixSeries(std::size_t samples, std::size_t rows, std::size_t cols)
      : samples_(samples), rows_(rows), cols_(cols), data_(samples * rows * cols, 0.0) {}

  std::size_t samples() const noexcept { return samples_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t block() const noexcept { return rows_ * cols_; }

  double* data(std::size_t n) { return data_.data() + n * block(); }
  const double* data(std::size_t n) const { return data_.data() + n * block(); }
  double& at(std::size_t n, std::size_t r, std::size_t c) { return data_[n * block() + r * cols_ + c]; }
  double at(std::size_t n, std::size_t r, std::size_t c) const { return data_[n * block() + r * cols_ + c]; }

  Eigen::Map<const RowMatrix> matrix(std::size_t n) const {
    return {data(n), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }
  Eigen::Map<RowMatrix> matrix(std::size_t n) {
    return {data(n), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }

  /// Time series of one entry.
  std::vector<double> entry(std::size_t r, std::size_t c) const;

  std::vector<double>& raw() noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  bool operator==(const MatrixSeries&) const = default;

 private:
  std::size_t samples_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// All kernel tables on a common time grid t_n = n * dt_k, n = 0..samples-1.
/// Rows indexed by j run over the resolved variables in partition order.
struct KernelTables {
  double dt_k = 0.0;
  MatrixSeries f;              // [n][j][mu]
  MatrixSeries g;              // [n][nu][mu]
  MatrixSeries gamma;          // [n][nu][mu]
  MatrixSeries b;              // [n][j][nu]
  MatrixSeries memory_matrix;  // [n][j][mu]

  std::size_t samples() const noexcept { return f.samples(); }
  double horizon() const noexcept {
    return samples() == 0 ? 0.0 : static_cast<double>(samples() - 1) * dt_k;
  }
};

/// sum_r R_r(u) * dG/du_r(u): the Liouvillian of G evaluated at a point of the flow.
double liouville_apply(const std::function<Vector5(const StateVector&)>& g_gradient,
                       const StateVector& u, const GridParams& p);

/// F_j(u,0) = R_j(u) - R_j(Pu) for state index j.
double initial_fluctuation(std::size_t j, const StateVector& u, const Partition& part,
                           const GridParams& p);

/// Analytic gradient of u -> F_j(u,0).
Vector5 initial_fluctuation_gradient(std::size_t j, const StateVector& u, const Partition& part,
                                     const GridParams& p);

/// Full-model runs started at the quadrature nodes lifted to state space
/// (unresolved components at the anchor). Trajectories are regenerated on
/// demand rather than stored; every node shares dt, horizon and stride.
class EnsembleRun {
 public:
  EnsembleRun(const QuadratureRule& rule, const Partition& part, GridParams params, double dt,
              double horizon, std::size_t sample_stride = 1);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<StateVector>& nodes() const noexcept { return nodes_; }
  const GridParams& params() const noexcept { return params_; }
  const Partition& partition() const noexcept { return partition_; }
  double dt() const noexcept { return dt_; }
  std::size_t sample_stride() const noexcept { return stride_; }
  double sample_dt() const noexcept { return dt_ * static_cast<double>(stride_); }
  std::size_t samples() const noexcept { return samples_; }

  /// Calls visit(n, u) for the n-th kernel sample of node q's trajectory.
  void propagate(std::size_t q, const std::function<void(std::size_t, const StateVector&)>& visit) const;

  Trajectory trajectory(std::size_t q) const;

 private:
  std::vector<StateVector> nodes_;
  Partition partition_;
  GridParams params_;
  double dt_;
  std::size_t stride_;
  std::size_t samples_;
};

/// Fills f, g and gamma (dt_k from the ensemble). Throws KernelError naming the node
/// if any trajectory fails.
KernelTables compute_tables(const EnsembleRun& ensemble, const HermiteBasis& basis,
                            const QuadratureRule& rule);

/// Trapezoidal second-kind Volterra solve, implicit in the newest sample:
/// b_n (I + dt_k/2 g_0) = f_n - dt_k (b_0 g_n / 2 + sum_{i=1}^{n-1} b_i g_{n-i}).
/// Throws NumericalError if the step matrix is singular.
MatrixSeries solve_volterra(const MatrixSeries& f, const MatrixSeries& g, double dt_k);

/// Max over samples of the discrete Volterra residual for a solved b.
double volterra_residual(const MatrixSeries& b, const MatrixSeries& f, const MatrixSeries& g,
                         double dt_k);

/// Trapezoidal M_n = int_0^{min(t_n, t_memory)} B(s) Gamma(t_n - s) ds where the
/// memory length is `memory_samples` kernel steps (npos = unlimited).
MatrixSeries assemble_memory_matrix(const MatrixSeries& b, const MatrixSeries& gamma, double dt_k,
                                    std::size_t memory_samples = std::numeric_limits<std::size_t>::max());

/// Single sample of assemble_memory_matrix: M_n with memory length `memory_samples`.
RowMatrix memory_matrix_at(const MatrixSeries& b, const MatrixSeries& gamma, double dt_k, std::size_t n,
                           std::size_t memory_samples = std::numeric_limits<std::size_t>::max());

/// Builds ensemble, tables, kernel coefficients and memory matrix in one go.
KernelTables build_kernel(const GridParams& params, const Partition& part, const HermiteBasis& basis,
                          const QuadratureRule& rule, double dt, double horizon,
                          std::size_t sample_stride = 1);

struct KernelPlateaus {
  double b100 = 0.0;  // late-time mean of b_1^{(1,0,0)}
  double b010 = 0.0;
  double b001 = 0.0;
  double antisymmetry_ratio = 0.0;  // b100 / b010
  double window_start = 0.0;        // start time of the averaging window
};

/// Late-time means (last 20% of the horizon) of the first resolved variable's
/// coefficients on the three degree-one basis functions.
KernelPlateaus kernel_diagnostics(const MatrixSeries& b, const HermiteBasis& basis, double dt_k,
                                  std::size_t j = 0);

class KernelError : public std::runtime_error {
 public:
  KernelError(const std::string& what, std::size_t node) : std::runtime_error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

}  // namespace mzgrid

#include "mzgrid/memory_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mzgrid/errors.hpp"

namespace mzgrid {

std::vector<double> MatrixSeries::entry(std::size_t r, std::size_t c) const {
  if (r >= rows_ || c >= cols_) throw UsageError("MatrixSeries entry out of range");
  std::vector<double> out(samples_);
  for (std::size_t n = 0; n < samples_; ++n) out[n] = at(n, r, c);
  return out;
}

double liouville_apply(const std::function<Vector5(const StateVector&)>& g_gradient,
                       const StateVector& u, const GridParams& p) {
  return rhs(u, p).dot(g_gradient(u));
}

double initial_fluctuation(std::size_t j, const StateVector& u, const Partition& part,
                           const GridParams& p) {
  if (j >= kStateDim) throw UsageError("state index out of range");
  return rhs(u, p)[static_cast<Eigen::Index>(j)] -
         rhs(project_state(u, part), p)[static_cast<Eigen::Index>(j)];
}

Vector5 initial_fluctuation_gradient(std::size_t j, const StateVector& u, const Partition& part,
                                     const GridParams& p) {
  if (j >= kStateDim) throw UsageError("state index out of range");
  const auto row = static_cast<Eigen::Index>(j);
  Vector5 grad = rhs_jacobian(u, p).row(row).transpose();
  // Pu does not depend on the unresolved coordinates, so only resolved
  // columns of the projected Jacobian contribute.
  const Matrix5 jac_projected = rhs_jacobian(project_state(u, part), p);
  for (std::size_t r : part.resolved()) {
    grad[static_cast<Eigen::Index>(r)] -= jac_projected(row, static_cast<Eigen::Index>(r));
  }
  return grad;
}

EnsembleRun::EnsembleRun(const QuadratureRule& rule, const Partition& part, GridParams params, double dt,
                         double horizon, std::size_t sample_stride)
    : partition_(part), params_(params), dt_(dt), stride_(sample_stride) {
  if (!(dt > 0.0)) throw UsageError("ensemble dt must be positive");
  if (sample_stride == 0) throw UsageError("ensemble sample stride must be >= 1");
  if (static_cast<std::size_t>(rule.dim) != part.resolved().size()) {
    throw UsageError("quadrature dimension does not match the number of resolved variables");
  }
  params_.validate();
  samples_ = step_count(horizon, sample_dt()) + 1;
  nodes_.reserve(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const auto node = rule.node(q);
    nodes_.push_back(lift(Eigen::Map<const Eigen::VectorXd>(node.data(), rule.dim), part));
  }
}

void EnsembleRun::propagate(std::size_t q,
                            const std::function<void(std::size_t, const StateVector&)>& visit) const {
  if (q >= nodes_.size()) throw UsageError("ensemble node index out of range");
  StateVector u = nodes_[q];
  visit(0, u);
  std::size_t step = 0;
  for (std::size_t n = 1; n < samples_; ++n) {
    for (std::size_t s = 0; s < stride_; ++s, ++step) {
      u = step_euler(u, params_, dt_, static_cast<double>(step) * dt_);
    }
    visit(n, u);
  }
}

Trajectory EnsembleRun::trajectory(std::size_t q) const {
  Trajectory traj(sample_dt(), state_labels());
  traj.reserve(samples_);
  propagate(q, [&](std::size_t, const StateVector& u) { traj.push_back({u.x.data(), kStateDim}); });
  return traj;
}

KernelTables compute_tables(const EnsembleRun& ensemble, const HermiteBasis& basis,
                            const QuadratureRule& rule) {
  const Partition& part = ensemble.partition();
  const auto& res = part.resolved();
  const std::size_t nres = res.size();
  if (static_cast<std::size_t>(basis.dim()) != nres || rule.size() != ensemble.size()) {
    throw UsageError("basis, rule and ensemble disagree on dimensions");
  }
  const std::size_t K = basis.size();
  const std::size_t N = ensemble.samples();

  KernelTables tables;
  tables.dt_k = ensemble.sample_dt();
  tables.f = MatrixSeries(N, nres, K);
  tables.g = MatrixSeries(N, K, K);
  tables.gamma = MatrixSeries(N, K, K);

  const GridParams& p = ensemble.params();
  const Matrix5 a = assemble_matrix_a(p);

  std::vector<double> h0(K), h(K), dh(K * nres), lh(K), lf(nres), weighted_h0(K);
  std::vector<double> uhat(nres);

  // Nodes are reduced in index order so the sums are reproducible.
  for (std::size_t q = 0; q < ensemble.size(); ++q) {
    basis.evaluate_all(rule.node(q), h0);
    for (std::size_t mu = 0; mu < K; ++mu) weighted_h0[mu] = rule.weights[q] * h0[mu];

    auto visit = [&](std::size_t n, const StateVector& u) {
      const Vector5 r = rhs(u, p);
      const Matrix5 jac = a * hessian(u, p);
      const Matrix5 jac_proj = a * hessian(project_state(u, part), p);
      const Vector5 jr = jac * r;
      for (std::size_t jj = 0; jj < nres; ++jj) {
        const auto row = static_cast<Eigen::Index>(res[jj]);
        double v = jr[row];
        for (std::size_t rr : res) v -= jac_proj(row, static_cast<Eigen::Index>(rr)) * r[static_cast<Eigen::Index>(rr)];
        lf[jj] = v;
      }
      for (std::size_t k = 0; k < nres; ++k) uhat[k] = u[res[k]];
      basis.evaluate_all_with_gradient(uhat, h, dh);
      for (std::size_t nu = 0; nu < K; ++nu) {
        double v = 0.0;
        for (std::size_t k = 0; k < nres; ++k) v += dh[nu * nres + k] * r[static_cast<Eigen::Index>(res[k])];
        lh[nu] = v;
      }
      double* f = tables.f.data(n);
      double* g = tables.g.data(n);
      double* gm = tables.gamma.data(n);
      for (std::size_t jj = 0; jj < nres; ++jj) {
        for (std::size_t mu = 0; mu < K; ++mu) f[jj * K + mu] += lf[jj] * weighted_h0[mu];
      }
      for (std::size_t nu = 0; nu < K; ++nu) {
        for (std::size_t mu = 0; mu < K; ++mu) {
          g[nu * K + mu] += lh[nu] * weighted_h0[mu];
          gm[nu * K + mu] += h[nu] * weighted_h0[mu];
        }
      }
    };

    try {
      ensemble.propagate(q, visit);
    } catch (const IntegrationError& e) {
      throw KernelError("ensemble node " + std::to_string(q) + " failed: " + e.what(), q);
    } catch (const DomainError& e) {
      throw KernelError("ensemble node " + std::to_string(q) + " failed: " + e.what(), q);
    }
  }
  return tables;
}

namespace {

// acc (rows x K) += scale * sum_{i=lo}^{hi-1} x_i (rows x K) * y_{n-i} (K x K)
void accumulate_convolution(const MatrixSeries& x, const MatrixSeries& y, std::size_t n, std::size_t lo,
                            std::size_t hi, double* acc) {
  const std::size_t rows = x.rows(), K = x.cols(), cols = y.cols();
  for (std::size_t i = lo; i < hi; ++i) {
    const double* xi = x.data(i);
    const double* yk = y.data(n - i);
    for (std::size_t r = 0; r < rows; ++r) {
      double* out = acc + r * cols;
      for (std::size_t nu = 0; nu < K; ++nu) {
        const double coeff = xi[r * K + nu];
        if (coeff == 0.0) continue;
        const double* yrow = yk + nu * cols;
        for (std::size_t mu = 0; mu < cols; ++mu) out[mu] += coeff * yrow[mu];
      }
    }
  }
}

void add_scaled_product(const double* x, const double* y, double scale, std::size_t rows, std::size_t K,
                        std::size_t cols, double* acc) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t nu = 0; nu < K; ++nu) {
      const double coeff = scale * x[r * K + nu];
      if (coeff == 0.0) continue;
      for (std::size_t mu = 0; mu < cols; ++mu) acc[r * cols + mu] += coeff * y[nu * cols + mu];
    }
  }
}

void check_volterra_shapes(const MatrixSeries& f, const MatrixSeries& g) {
  if (f.samples() != g.samples() || f.cols() != g.rows() || g.rows() != g.cols()) {
    throw UsageError("Volterra tables f and g do not share sampling and basis size");
  }
}

}  // namespace

MatrixSeries solve_volterra(const MatrixSeries& f, const MatrixSeries& g, double dt_k) {
  check_volterra_shapes(f, g);
  if (!(dt_k > 0.0)) throw UsageError("dt_k must be positive");
  const std::size_t N = f.samples(), rows = f.rows(), K = f.cols();
  MatrixSeries b(N, rows, K);
  if (N == 0) return b;
  std::copy(f.data(0), f.data(0) + f.block(), b.data(0));
  if (N == 1) return b;

  // b_n S = rhs_n with S = I + dt/2 g_0, i.e. S^T b_n^T = rhs_n^T.
  const Eigen::MatrixXd step =
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K)) +
      0.5 * dt_k * Eigen::MatrixXd(g.matrix(0));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(step.transpose());
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    throw NumericalError("singular Volterra step matrix", 1);
  }

  std::vector<double> acc(rows * K);
  for (std::size_t n = 1; n < N; ++n) {
    std::fill(acc.begin(), acc.end(), 0.0);
    accumulate_convolution(b, g, n, 1, n, acc.data());
    add_scaled_product(b.data(0), g.data(n), 0.5, rows, K, K, acc.data());
    Eigen::Map<const RowMatrix> acc_m(acc.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(K));
    const RowMatrix rhs_n = f.matrix(n) - dt_k * acc_m;
    const Eigen::MatrixXd sol = lu.solve(Eigen::MatrixXd(rhs_n.transpose()));
    if (!sol.allFinite()) throw NumericalError("non-finite Volterra solution", n);
    b.matrix(n) = sol.transpose();
  }
  return b;
}

double volterra_residual(const MatrixSeries& b, const MatrixSeries& f, const MatrixSeries& g, double dt_k) {
  check_volterra_shapes(f, g);
  if (b.samples() != f.samples() || b.rows() != f.rows() || b.cols() != f.cols()) {
    throw UsageError("b does not match f");
  }
  const std::size_t N = f.samples(), rows = f.rows(), K = f.cols();
  std::vector<double> acc(rows * K);
  double worst = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    std::fill(acc.begin(), acc.end(), 0.0);
    if (n > 0) {
      accumulate_convolution(b, g, n, 1, n, acc.data());
      add_scaled_product(b.data(0), g.data(n), 0.5, rows, K, K, acc.data());
      add_scaled_product(b.data(n), g.data(0), 0.5, rows, K, K, acc.data());
    }
    for (std::size_t e = 0; e < rows * K; ++e) {
      const double r = b.data(n)[e] - (f.data(n)[e] - dt_k * acc[e]);
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

RowMatrix memory_matrix_at(const MatrixSeries& b, const MatrixSeries& gamma, double dt_k, std::size_t n,
                           std::size_t memory_samples) {
  if (b.samples() != gamma.samples() || b.cols() != gamma.rows() || gamma.rows() != gamma.cols()) {
    throw UsageError("b and gamma do not share sampling and basis size");
  }
  if (n >= b.samples()) throw UsageError("memory matrix sample beyond the kernel horizon");
  const std::size_t rows = b.rows(), K = b.cols();
  RowMatrix out = RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(K));
  const std::size_t upper = std::min(n, memory_samples);
  if (upper == 0) return out;
  double* acc = out.data();
  accumulate_convolution(b, gamma, n, 1, upper, acc);
  add_scaled_product(b.data(0), gamma.data(n), 0.5, rows, K, K, acc);
  add_scaled_product(b.data(upper), gamma.data(n - upper), 0.5, rows, K, K, acc);
  out *= dt_k;
  return out;
}

MatrixSeries assemble_memory_matrix(const MatrixSeries& b, const MatrixSeries& gamma, double dt_k,
                                    std::size_t memory_samples) {
  MatrixSeries m(b.samples(), b.rows(), b.cols());
  for (std::size_t n = 1; n < b.samples(); ++n) {
    m.matrix(n) = memory_matrix_at(b, gamma, dt_k, n, memory_samples);
  }
  return m;
}

KernelTables build_kernel(const GridParams& params, const Partition& part, const HermiteBasis& basis,
                          const QuadratureRule& rule, double dt, double horizon, std::size_t sample_stride) {
  const EnsembleRun ensemble(rule, part, params, dt, horizon, sample_stride);
  KernelTables tables = compute_tables(ensemble, basis, rule);
  tables.b = solve_volterra(tables.f, tables.g, tables.dt_k);
  tables.memory_matrix = assemble_memory_matrix(tables.b, tables.gamma, tables.dt_k);
  return tables;
}

KernelPlateaus kernel_diagnostics(const MatrixSeries& b, const HermiteBasis& basis, double dt_k,
                                  std::size_t j) {
  if (basis.order() < 1 || basis.dim() != 3) {
    throw UsageError("kernel diagnostics need a 3-dimensional basis of order >= 1");
  }
  if (j >= b.rows()) throw UsageError("resolved index out of range");
  if (b.samples() < 2) throw UsageError("kernel horizon too short for plateau estimates");
  const std::size_t N = b.samples();
  const std::size_t start = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(N - 1)));
  auto late_mean = [&](const MultiIndex& nu) {
    const std::size_t c = basis.position(nu);
    double s = 0.0;
    for (std::size_t n = start; n < N; ++n) s += b.at(n, j, c);
    return s / static_cast<double>(N - start);
  };
  KernelPlateaus out;
  out.b100 = late_mean({1, 0, 0});
  out.b010 = late_mean({0, 1, 0});
  out.b001 = late_mean({0, 0, 1});
  out.antisymmetry_ratio = out.b100 / out.b010;
  out.window_start = static_cast<double>(start) * dt_k;
  return out;
}

}  // namespace mzgrid

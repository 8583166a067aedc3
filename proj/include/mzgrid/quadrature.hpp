#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "mzgrid/hermite.hpp"

namespace mzgrid {

/// Discrete probability measure: nodes in physical coordinates (row-major,
/// one row per node) with matching weights. Smolyak weights may be negative.
struct QuadratureRule {
  int dim = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  std::span<const double> node(std::size_t q) const {
    return {nodes.data() + q * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

enum class QuadratureKind {
  /// Smolyak combination of Gauss-Hermite rules with linear growth (level i
  /// uses i points). In 3 dimensions level 7 has 681 distinct nodes and is
  /// exact for total degree 13.
  kSparse,
  /// Full tensor Gauss-Hermite rule with `level` points per dimension.
  kTensor,
};

/// n-point Gauss-Hermite rule for the standard normal density; weights sum to 1.
void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Quadrature for the Gaussian measure with the basis means/stds. Throws
/// UsageError for level < 1.
QuadratureRule build_quadrature(const HermiteBasis& basis, int level,
                                QuadratureKind kind = QuadratureKind::kSparse);

/// c_nu = sum_q w_q samples[q] h^nu(node_q).
Eigen::VectorXd finite_rank_project(std::span<const double> samples, const HermiteBasis& basis,
                                    const QuadratureRule& rule);

/// sum_nu c_nu h^nu(x).
double reconstruct(const Eigen::VectorXd& coefficients, const HermiteBasis& basis,
                   std::span<const double> x);

/// G_{nu,mu} = sum_q w_q h^nu(node_q) h^mu(node_q).
Eigen::MatrixXd gram_matrix(const HermiteBasis& basis, const QuadratureRule& rule);

}  // namespace mzgrid

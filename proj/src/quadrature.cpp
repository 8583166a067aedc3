#include "mzgrid/quadrature.hpp"

#include <cmath>
#include <map>
#include <string>

#include "mzgrid/errors.hpp"

namespace mzgrid {
namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Visits every level vector i (entries >= 1) with lo <= |i| <= hi.
template <typename Fn>
void for_each_level(int dim, int lo, int hi, std::vector<int>& current, int pos, int used, Fn&& fn) {
  if (pos == dim) {
    if (used >= lo) fn(current, used);
    return;
  }
  const int remaining = dim - pos - 1;
  for (int i = 1; used + i + remaining <= hi; ++i) {
    current[static_cast<std::size_t>(pos)] = i;
    for_each_level(dim, lo, hi, current, pos + 1, used + i, fn);
  }
}

}  // namespace

void gauss_hermite(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw UsageError("Gauss-Hermite rule needs at least one point");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes.assign(static_cast<std::size_t>(n), 0.0);
  weights.assign(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()[k];
    weights[static_cast<std::size_t>(k)] = eig.eigenvectors()(0, k) * eig.eigenvectors()(0, k);
  }
  // Enforce exact symmetry so shared nodes (the origin) coincide across rules.
  for (int k = 0; k < n / 2; ++k) {
    const auto lo = static_cast<std::size_t>(k), hi = static_cast<std::size_t>(n - 1 - k);
    const double x = 0.5 * (nodes[hi] - nodes[lo]);
    const double w = 0.5 * (weights[hi] + weights[lo]);
    nodes[lo] = -x;
    nodes[hi] = x;
    weights[lo] = weights[hi] = w;
  }
  if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
}

QuadratureRule build_quadrature(const HermiteBasis& basis, int level, QuadratureKind kind) {
  if (level < 1) throw UsageError("quadrature level must be >= 1");
  const int d = basis.dim();

  std::vector<std::vector<double>> rule_nodes(static_cast<std::size_t>(level) + 1);
  std::vector<std::vector<double>> rule_weights(rule_nodes.size());
  for (int m = 1; m <= level; ++m) {
    gauss_hermite(m, rule_nodes[static_cast<std::size_t>(m)], rule_weights[static_cast<std::size_t>(m)]);
  }

  // Standardized node -> accumulated weight; std::map keeps a deterministic order.
  std::map<std::vector<double>, double> merged;
  auto add_tensor = [&](const std::vector<int>& points, double coef) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> z(static_cast<std::size_t>(d));
    while (true) {
      double w = coef;
      for (std::size_t k = 0; k < z.size(); ++k) {
        const auto m = static_cast<std::size_t>(points[k]);
        z[k] = rule_nodes[m][idx[k]];
        w *= rule_weights[m][idx[k]];
      }
      merged[z] += w;
      std::size_t k = 0;
      for (; k < idx.size(); ++k) {
        if (++idx[k] < static_cast<std::size_t>(points[k])) break;
        idx[k] = 0;
      }
      if (k == idx.size()) break;
    }
  };

  if (kind == QuadratureKind::kTensor) {
    add_tensor(std::vector<int>(static_cast<std::size_t>(d), level), 1.0);
  } else {
    std::vector<int> current(static_cast<std::size_t>(d), 1);
    const int top = level + d - 1;
    for_each_level(d, level, top, current, 0, 0, [&](const std::vector<int>& lv, int norm) {
      const int gap = top - norm;
      const double coef = ((gap % 2) ? -1.0 : 1.0) * binomial(d - 1, gap);
      add_tensor(lv, coef);
    });
  }

  QuadratureRule rule;
  rule.dim = d;
  rule.nodes.reserve(merged.size() * static_cast<std::size_t>(d));
  rule.weights.reserve(merged.size());
  for (const auto& [z, w] : merged) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      rule.nodes.push_back(basis.means()[k] + basis.stds()[k] * z[k]);
    }
    rule.weights.push_back(w);
  }
  return rule;
}

Eigen::VectorXd finite_rank_project(std::span<const double> samples, const HermiteBasis& basis,
                                    const QuadratureRule& rule) {
  if (samples.size() != rule.size()) {
    throw UsageError("finite_rank_project: " + std::to_string(samples.size()) + " samples for " +
                     std::to_string(rule.size()) + " quadrature nodes");
  }
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  Eigen::VectorXd h(coeffs.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.evaluate_all(rule.node(q), {h.data(), basis.size()});
    coeffs += (rule.weights[q] * samples[q]) * h;
  }
  return coeffs;
}

double reconstruct(const Eigen::VectorXd& coefficients, const HermiteBasis& basis,
                   std::span<const double> x) {
  if (static_cast<std::size_t>(coefficients.size()) != basis.size()) {
    throw UsageError("reconstruct: coefficient count does not match basis size");
  }
  return coefficients.dot(basis.evaluate_all(x));
}

Eigen::MatrixXd gram_matrix(const HermiteBasis& basis, const QuadratureRule& rule) {
  const auto k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd h(k);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    basis.evaluate_all(rule.node(q), {h.data(), basis.size()});
    gram.noalias() += rule.weights[q] * h * h.transpose();
  }
  return gram;
}

}  // namespace mzgrid

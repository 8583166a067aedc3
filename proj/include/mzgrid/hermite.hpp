#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace mzgrid {

using MultiIndex = std::vector<int>;

/// All multi-indices of length `dim` with total degree <= order, graded
/// lexicographic: ascending total degree, and within one degree the larger
/// leading exponent first, e.g. for dim 3:
/// (0,0,0) (1,0,0) (0,1,0) (0,0,1) (2,0,0) (1,1,0) (1,0,1) (0,2,0) ...
std::vector<MultiIndex> enumerate_multi_indices(int dim, int order);

/// C(dim + order, order), the size of the total-degree index set.
std::size_t total_degree_count(int dim, int order);

enum class HermiteConvention {
  /// Probabilists' Hermite He_n(z)/sqrt(n!) in z = (x - mean)/std. Orthonormal
  /// under the Gaussian with that mean and std.
  kOrthonormal,
  /// Physicists' H_n of the raw, unshifted variable (H_1(x) = 2x). Not
  /// orthonormal; kept for comparison with published kernel values.
  kPhysicistsRaw,
};

/// Tensor-product Hermite basis over the resolved variables.
class HermiteBasis {
 public:
  HermiteBasis(int order, std::vector<double> means, std::vector<double> stds,
               HermiteConvention convention = HermiteConvention::kOrthonormal);

  int dim() const noexcept { return static_cast<int>(means_.size()); }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return index_set_.size(); }
  HermiteConvention convention() const noexcept { return convention_; }
  const std::vector<MultiIndex>& index_set() const noexcept { return index_set_; }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& stds() const noexcept { return stds_; }

  /// Position of nu in the index set; throws UsageError if absent.
  std::size_t position(const MultiIndex& nu) const;

  /// h^nu(x) for a single multi-index.
  double evaluate(const MultiIndex& nu, std::span<const double> x) const;

  /// All basis values at x, in index-set order.
  void evaluate_all(std::span<const double> x, std::span<double> values) const;
  Eigen::VectorXd evaluate_all(std::span<const double> x) const;

  /// Values and gradient (size() x dim(), row-major) at x.
  void evaluate_all_with_gradient(std::span<const double> x, std::span<double> values,
                                  std::span<double> gradient) const;

 private:
  // Univariate values p_0..p_order and derivatives wrt the raw variable.
  void univariate(int axis, double x, double* values, double* derivs) const;

  int order_;
  std::vector<double> means_;
  std::vector<double> stds_;
  HermiteConvention convention_;
  std::vector<MultiIndex> index_set_;
};

/// h^nu(x) for nu in the basis; throws UsageError if nu is not in the index set.
double hermite_eval(const HermiteBasis& basis, const MultiIndex& nu, std::span<const double> x);

}  // namespace mzgrid

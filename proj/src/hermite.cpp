#include "mzgrid/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mzgrid/errors.hpp"

namespace mzgrid {
namespace {

// Exponent vectors of total degree exactly `degree`, leading exponent descending.
void append_degree(int dim, int degree, MultiIndex& current, int pos, std::vector<MultiIndex>& out) {
  if (pos == dim - 1) {
    current[pos] = degree;
    out.push_back(current);
    return;
  }
  for (int e = degree; e >= 0; --e) {
    current[pos] = e;
    append_degree(dim, degree - e, current, pos + 1, out);
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_multi_indices(int dim, int order) {
  if (dim < 1) throw UsageError("multi-index dimension must be >= 1");
  if (order < 0) throw UsageError("multi-index order must be >= 0");
  std::vector<MultiIndex> out;
  out.reserve(total_degree_count(dim, order));
  MultiIndex current(static_cast<std::size_t>(dim), 0);
  for (int degree = 0; degree <= order; ++degree) append_degree(dim, degree, current, 0, out);
  return out;
}

std::size_t total_degree_count(int dim, int order) {
  // C(dim+order, order) computed incrementally; exact for the sizes used here.
  std::size_t c = 1;
  for (int k = 1; k <= order; ++k) {
    c = c * static_cast<std::size_t>(dim + k) / static_cast<std::size_t>(k);
  }
  return c;
}

HermiteBasis::HermiteBasis(int order, std::vector<double> means, std::vector<double> stds,
                           HermiteConvention convention)
    : order_(order), means_(std::move(means)), stds_(std::move(stds)), convention_(convention) {
  if (means_.empty() || means_.size() != stds_.size()) {
    throw UsageError("Hermite basis needs matching, non-empty means and stds");
  }
  for (double s : stds_) {
    if (!(s > 0.0)) throw ConfigError("Hermite basis standard deviations must be positive");
  }
  index_set_ = enumerate_multi_indices(dim(), order_);
}

std::size_t HermiteBasis::position(const MultiIndex& nu) const {
  auto it = std::find(index_set_.begin(), index_set_.end(), nu);
  if (it == index_set_.end()) throw UsageError("multi-index is not in the basis index set");
  return static_cast<std::size_t>(it - index_set_.begin());
}

void HermiteBasis::univariate(int axis, double x, double* values, double* derivs) const {
  values[0] = 1.0;
  derivs[0] = 0.0;
  if (order_ == 0) return;
  if (convention_ == HermiteConvention::kOrthonormal) {
    // psi_{n+1} = (z psi_n - sqrt(n) psi_{n-1}) / sqrt(n+1);  psi_n' = sqrt(n) psi_{n-1}
    const double inv_std = 1.0 / stds_[static_cast<std::size_t>(axis)];
    const double z = (x - means_[static_cast<std::size_t>(axis)]) * inv_std;
    values[1] = z;
    for (int n = 1; n < order_; ++n) {
      values[n + 1] = (z * values[n] - std::sqrt(static_cast<double>(n)) * values[n - 1]) /
                      std::sqrt(static_cast<double>(n + 1));
    }
    for (int n = 1; n <= order_; ++n) {
      derivs[n] = std::sqrt(static_cast<double>(n)) * values[n - 1] * inv_std;
    }
  } else {
    // H_{n+1} = 2x H_n - 2n H_{n-1};  H_n' = 2n H_{n-1}
    values[1] = 2.0 * x;
    for (int n = 1; n < order_; ++n) {
      values[n + 1] = 2.0 * x * values[n] - 2.0 * static_cast<double>(n) * values[n - 1];
    }
    for (int n = 1; n <= order_; ++n) derivs[n] = 2.0 * static_cast<double>(n) * values[n - 1];
  }
}

double HermiteBasis::evaluate(const MultiIndex& nu, std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dim())) throw UsageError("point dimension mismatch");
  (void)position(nu);
  std::vector<double> vals(static_cast<std::size_t>(order_) + 1), ders(vals.size());
  double out = 1.0;
  for (int k = 0; k < dim(); ++k) {
    univariate(k, x[static_cast<std::size_t>(k)], vals.data(), ders.data());
    out *= vals[static_cast<std::size_t>(nu[static_cast<std::size_t>(k)])];
  }
  return out;
}

void HermiteBasis::evaluate_all(std::span<const double> x, std::span<double> values) const {
  if (x.size() != static_cast<std::size_t>(dim()) || values.size() != size()) {
    throw UsageError("evaluate_all: size mismatch");
  }
  const std::size_t stride = static_cast<std::size_t>(order_) + 1;
  std::vector<double> vals(stride * static_cast<std::size_t>(dim())), ders(vals.size());
  for (int k = 0; k < dim(); ++k) {
    univariate(k, x[static_cast<std::size_t>(k)], vals.data() + k * stride, ders.data() + k * stride);
  }
  for (std::size_t i = 0; i < size(); ++i) {
    double prod = 1.0;
    for (int k = 0; k < dim(); ++k) {
      prod *= vals[k * stride + static_cast<std::size_t>(index_set_[i][static_cast<std::size_t>(k)])];
    }
    values[i] = prod;
  }
}

Eigen::VectorXd HermiteBasis::evaluate_all(std::span<const double> x) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  evaluate_all(x, {out.data(), size()});
  return out;
}

void HermiteBasis::evaluate_all_with_gradient(std::span<const double> x, std::span<double> values,
                                              std::span<double> gradient) const {
  const auto d = static_cast<std::size_t>(dim());
  if (x.size() != d || values.size() != size() || gradient.size() != size() * d) {
    throw UsageError("evaluate_all_with_gradient: size mismatch");
  }
  const std::size_t stride = static_cast<std::size_t>(order_) + 1;
  std::vector<double> vals(stride * d), ders(vals.size());
  for (std::size_t k = 0; k < d; ++k) {
    univariate(static_cast<int>(k), x[k], vals.data() + k * stride, ders.data() + k * stride);
  }
  for (std::size_t i = 0; i < size(); ++i) {
    const MultiIndex& nu = index_set_[i];
    double prod = 1.0;
    for (std::size_t k = 0; k < d; ++k) prod *= vals[k * stride + static_cast<std::size_t>(nu[k])];
    values[i] = prod;
    for (std::size_t r = 0; r < d; ++r) {
      double g = 1.0;
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t e = k * stride + static_cast<std::size_t>(nu[k]);
        g *= (k == r) ? ders[e] : vals[e];
      }
      gradient[i * d + r] = g;
    }
  }
}

double hermite_eval(const HermiteBasis& basis, const MultiIndex& nu, std::span<const double> x) {
  return basis.evaluate(nu, x);
}

}  // namespace mzgrid

#pragma once

// Delta-measure projection: resolved components are kept, unresolved
// components are pinned to fixed anchor values.

#include <cstddef>
#include <vector>

#include "mzgrid/demarco.hpp"

namespace mzgrid {

class Partition {
 public:
  /// Generators resolved (omega1, omega2, alpha2); load (alpha3, V3) anchored.
  static Partition three_bus(double alpha3_anchor, double v3_anchor);

  /// Throws UsageError unless the index sets are disjoint, cover 0..dim-1,
  /// and the anchor has one value per unresolved index.
  Partition(std::vector<std::size_t> resolved, std::vector<std::size_t> unresolved,
            std::vector<double> anchor);

  const std::vector<std::size_t>& resolved() const noexcept { return resolved_; }
  const std::vector<std::size_t>& unresolved() const noexcept { return unresolved_; }
  const std::vector<double>& anchor() const noexcept { return anchor_; }
  std::size_t state_dim() const noexcept { return resolved_.size() + unresolved_.size(); }
  bool is_resolved(std::size_t index) const;

 private:
  std::vector<std::size_t> resolved_;
  std::vector<std::size_t> unresolved_;
  std::vector<double> anchor_;
};

StateVector project_state(const StateVector& u, const Partition& part);

/// Resolved components of u, in partition order.
Eigen::VectorXd restrict_resolved(const StateVector& u, const Partition& part);

/// Full state built from resolved values with unresolved components at the anchor.
StateVector lift(const Eigen::VectorXd& resolved, const Partition& part);

}  // namespace mzgrid

#include "mzgrid/projection.hpp"

#include <algorithm>

#include "mzgrid/errors.hpp"

namespace mzgrid {

Partition Partition::three_bus(double alpha3_anchor, double v3_anchor) {
  return Partition({kOmega1, kOmega2, kAlpha2}, {kAlpha3, kV3}, {alpha3_anchor, v3_anchor});
}

Partition::Partition(std::vector<std::size_t> resolved, std::vector<std::size_t> unresolved,
                     std::vector<double> anchor)
    : resolved_(std::move(resolved)), unresolved_(std::move(unresolved)), anchor_(std::move(anchor)) {
  if (anchor_.size() != unresolved_.size()) {
    throw UsageError("partition anchor needs one value per unresolved index");
  }
  std::vector<std::size_t> all(resolved_);
  all.insert(all.end(), unresolved_.begin(), unresolved_.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] != i) throw UsageError("partition index sets must be disjoint and cover 0..n-1");
  }
}

bool Partition::is_resolved(std::size_t index) const {
  return std::find(resolved_.begin(), resolved_.end(), index) != resolved_.end();
}

StateVector project_state(const StateVector& u, const Partition& part) {
  if (part.state_dim() != kStateDim) throw UsageError("partition does not match a 3-bus state");
  StateVector out = u;
  for (std::size_t k = 0; k < part.unresolved().size(); ++k) {
    out[part.unresolved()[k]] = part.anchor()[k];
  }
  return out;
}

Eigen::VectorXd restrict_resolved(const StateVector& u, const Partition& part) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(part.resolved().size()));
  for (std::size_t k = 0; k < part.resolved().size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = u[part.resolved()[k]];
  }
  return out;
}

StateVector lift(const Eigen::VectorXd& resolved, const Partition& part) {
  if (static_cast<std::size_t>(resolved.size()) != part.resolved().size()) {
    throw UsageError("resolved vector length does not match the partition");
  }
  StateVector out;
  for (std::size_t k = 0; k < part.resolved().size(); ++k) {
    out[part.resolved()[k]] = resolved[static_cast<Eigen::Index>(k)];
  }
  for (std::size_t k = 0; k < part.unresolved().size(); ++k) {
    out[part.unresolved()[k]] = part.anchor()[k];
  }
  return out;
}

}  // namespace mzgrid

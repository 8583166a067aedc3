#include "mzgrid/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "mzgrid/errors.hpp"

namespace mzgrid {

Trajectory::Trajectory(double dt, std::vector<std::string> labels, double t0)
    : dt_(dt), t0_(t0), labels_(std::move(labels)) {
  if (!(dt > 0.0)) throw UsageError("trajectory dt must be positive");
  if (labels_.empty()) throw UsageError("trajectory needs at least one column");
}

void Trajectory::push_back(std::span<const double> values) {
  if (values.size() != labels_.size()) {
    throw UsageError("trajectory row has " + std::to_string(values.size()) + " values, expected " +
                     std::to_string(labels_.size()));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

std::span<const double> Trajectory::row(std::size_t i) const {
  if (i >= size()) throw UsageError("trajectory row index out of range");
  return {data_.data() + i * width(), width()};
}

std::size_t Trajectory::column_index(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw UsageError("trajectory has no column '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<double> Trajectory::column(const std::string& label) const {
  const std::size_t k = column_index(label);
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i, k);
  return out;
}

std::vector<double> Trajectory::times() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = time(i);
  return out;
}

Trajectory Trajectory::subsample(std::size_t stride) const {
  if (stride == 0) throw UsageError("subsample stride must be >= 1");
  Trajectory out(dt_ * static_cast<double>(stride), labels_, t0_);
  out.reserve(size() / stride + 1);
  for (std::size_t i = 0; i < size(); i += stride) out.push_back(row(i));
  return out;
}

std::size_t step_count(double t_end, double dt) {
  if (!(dt > 0.0)) throw UsageError("dt must be positive");
  if (t_end < 0.0) throw UsageError("t_end must be non-negative");
  return static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
}

}  // namespace mzgrid

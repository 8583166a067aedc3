#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mzgrid {

/// Uniformly sampled multivariate time series. Sample i sits at t0 + i * dt,
/// so uniform spacing holds by construction.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double dt, std::vector<std::string> labels, double t0 = 0.0);

  void push_back(std::span<const double> values);
  void reserve(std::size_t samples) { data_.reserve(samples * labels_.size()); }

  std::size_t size() const noexcept { return labels_.empty() ? 0 : data_.size() / labels_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t width() const noexcept { return labels_.size(); }
  double dt() const noexcept { return dt_; }
  double t0() const noexcept { return t0_; }
  double time(std::size_t i) const noexcept { return t0_ + static_cast<double>(i) * dt_; }
  double end_time() const noexcept { return empty() ? t0_ : time(size() - 1); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  std::span<const double> row(std::size_t i) const;
  double value(std::size_t i, std::size_t column) const { return data_[i * width() + column]; }

  /// Index of a named column; throws UsageError when absent.
  std::size_t column_index(const std::string& label) const;
  std::vector<double> column(const std::string& label) const;
  std::vector<double> times() const;

  /// Every `stride`-th sample (stride 1 returns a copy).
  Trajectory subsample(std::size_t stride) const;

 private:
  double dt_ = 0.0;
  double t0_ = 0.0;
  std::vector<std::string> labels_;
  std::vector<double> data_;
};

/// Number of whole steps of size dt that fit in [0, t_end], tolerant of
/// representation error in t_end / dt.
std::size_t step_count(double t_end, double dt);

}  // namespace mzgrid

#include "mzgrid/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mzgrid/errors.hpp"

namespace mzgrid {
namespace {

constexpr double kGridTolerance = 1e-9;

std::size_t memory_samples_for(const MemorySpec& mode, double dt_k) {
  switch (mode.mode) {
    case MemoryMode::kNone:
      return 0;
    case MemoryMode::kFinite:
      return static_cast<std::size_t>(std::llround(mode.t_memory / dt_k));
    case MemoryMode::kInfinite:
      break;
  }
  return std::numeric_limits<std::size_t>::max();
}

Eigen::Vector3d project_memory(const KernelTables& tables, const Eigen::VectorXd& h0, std::size_t n,
                               std::size_t memory_samples) {
  if (memory_samples == 0) return Eigen::Vector3d::Zero();
  if (n <= memory_samples) return tables.memory_matrix.matrix(n) * h0;
  return memory_matrix_at(tables.b, tables.gamma, tables.dt_k, n, memory_samples) * h0;
}

// Grid position of t: exact sample index, or lower index plus fraction.
std::pair<std::size_t, double> locate(double t, double dt_k, std::size_t samples) {
  if (t < 0.0) throw UsageError("memory forcing requested at negative time");
  const double x = t / dt_k;
  const double last = static_cast<double>(samples - 1);
  if (x > last * (1.0 + kGridTolerance) + kGridTolerance) {
    std::ostringstream msg;
    msg << "memory forcing requested at t = " << t << " beyond the kernel horizon " << last * dt_k;
    throw UsageError(msg.str());
  }
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= kGridTolerance * std::max(1.0, x)) {
    return {std::min(static_cast<std::size_t>(nearest), samples - 1), 0.0};
  }
  const auto lo = static_cast<std::size_t>(std::floor(x));
  return {lo, x - static_cast<double>(lo)};
}

void check_tables(const KernelTables& tables, const Eigen::VectorXd& h0) {
  if (tables.samples() == 0) throw UsageError("empty kernel tables");
  if (tables.memory_matrix.rows() != 3 || static_cast<Eigen::Index>(tables.memory_matrix.cols()) != h0.size()) {
    throw UsageError("kernel tables do not match a 3-variable reduced model with this basis");
  }
}

}  // namespace

std::string MemorySpec::label() const {
  switch (mode) {
    case MemoryMode::kNone:
      return "none";
    case MemoryMode::kInfinite:
      return "infinite";
    case MemoryMode::kFinite: {
      std::ostringstream out;
      out << "tmem" << t_memory;
      return out.str();
    }
  }
  return "unknown";
}

void ReducedConfig::validate(double kernel_horizon) const {
  if (!(dt > 0.0)) throw ConfigError("reduced dt must be positive");
  if (!(t_end > 0.0)) throw ConfigError("reduced t_end must be positive");
  if (basis_order < 0) throw ConfigError("basis order must be >= 0");
  if (output_stride == 0) throw ConfigError("output stride must be >= 1");
  if (memory.mode == MemoryMode::kFinite) {
    if (!(memory.t_memory >= 0.0)) throw ConfigError("t_memory must be non-negative");
    if (memory.t_memory > kernel_horizon * (1.0 + kGridTolerance)) {
      throw ConfigError("t_memory exceeds the kernel horizon");
    }
  }
  if (memory.mode != MemoryMode::kNone && t_end > kernel_horizon * (1.0 + kGridTolerance)) {
    throw ConfigError("kernel horizon is shorter than t_end; rebuild the kernel with a longer horizon");
  }
}

Eigen::Vector3d markovian_rhs(const Eigen::Vector3d& u_hat, const GridParams& p,
                              const Eigen::Vector2d& anchor) {
  const double w1 = u_hat[0], w2 = u_hat[1], a2 = u_hat[2];
  const double a3 = anchor[0], v3 = anchor[1];
  const double a11 = -p.d1 / (p.m1 * p.m1), a13 = 1.0 / p.m1, a14 = 1.0 / p.m1;
  const double a22 = -p.d2 / (p.m2 * p.m2), a23 = -1.0 / p.m2;
  const double a31 = -1.0 / p.m1, a32 = 1.0 / p.m2;
  const double flow2 = p.b1 * p.v1 * p.v2 * std::sin(a2) + p.b3 * p.v2 * v3 * std::sin(a2 - a3) + p.p2;
  const double flow3 = p.b2 * p.v1 * v3 * std::sin(a3) + p.b3 * p.v2 * v3 * std::sin(a3 - a2) + p.p3;
  return {a11 * p.m1 * w1 + a13 * flow2 + a14 * flow3, a22 * p.m2 * w2 + a23 * flow2,
          a31 * p.m1 * w1 + a32 * p.m2 * w2};
}

Eigen::Vector3d memory_forcing(double t, const KernelTables& tables, const Eigen::VectorXd& h0,
                               const MemorySpec& mode) {
  check_tables(tables, h0);
  const auto [n, frac] = locate(t, tables.dt_k, tables.samples());
  const std::size_t m = memory_samples_for(mode, tables.dt_k);
  if (m == 0) return Eigen::Vector3d::Zero();
  const Eigen::Vector3d lo = project_memory(tables, h0, n, m);
  if (frac == 0.0) return lo;
  return (1.0 - frac) * lo + frac * project_memory(tables, h0, n + 1, m);
}

MemoryForcing::MemoryForcing(const KernelTables& tables, const Eigen::VectorXd& h0, const MemorySpec& mode)
    : mode_(mode.mode), dt_k_(tables.dt_k), horizon_(tables.horizon()), samples_(tables.samples()) {
  check_tables(tables, h0);
  const std::size_t m = memory_samples_for(mode, dt_k_);
  series_.assign(samples_ * 3, 0.0);
  if (m == 0) return;
  for (std::size_t n = 0; n < samples_; ++n) {
    const Eigen::Vector3d v = project_memory(tables, h0, n, m);
    std::copy(v.data(), v.data() + 3, series_.begin() + static_cast<std::ptrdiff_t>(n * 3));
  }
}

Eigen::Vector3d MemoryForcing::sample(std::size_t n) const {
  return {series_[n * 3], series_[n * 3 + 1], series_[n * 3 + 2]};
}

Eigen::Vector3d MemoryForcing::at(double t) const {
  if (mode_ == MemoryMode::kNone) return Eigen::Vector3d::Zero();
  const auto [n, frac] = locate(t, dt_k_, samples_);
  if (frac == 0.0) return sample(n);
  return (1.0 - frac) * sample(n) + frac * sample(n + 1);
}

ReducedState step_reduced_explicit(const ReducedState& state, double t_n, const ReducedConfig& cfg,
                                   const MemoryForcing& forcing, const GridParams& p,
                                   const Eigen::Vector2d& anchor) {
  ReducedState next = state;
  next.u_hat = state.u_hat + cfg.dt * (markovian_rhs(state.u_hat, p, anchor) + forcing.at(t_n));
  return next;
}

ReducedState step_reduced_implicit(const ReducedState& state, double t_n, const ReducedConfig& cfg,
                                   const MemoryForcing& forcing, const GridParams& p,
                                   const Eigen::Vector2d& anchor) {
  ReducedState next = state;
  next.u_hat = state.u_hat + cfg.dt * (markovian_rhs(state.u_hat, p, anchor) + forcing.at(t_n + cfg.dt));
  return next;
}

const std::vector<std::string>& reduced_labels() {
  static const std::vector<std::string> labels{"omega1", "omega2", "alpha2", "mem1", "mem2", "mem3"};
  return labels;
}

Trajectory simulate_reduced(const Eigen::Vector3d& u_hat0, const ReducedConfig& cfg,
                            const KernelTables& tables, const HermiteBasis& basis, const GridParams& p,
                            const Partition& part) {
  cfg.validate(tables.horizon());
  if (basis.size() != total_degree_count(3, cfg.basis_order) || basis.dim() != 3) {
    throw ConfigError("basis order does not match the reduced configuration");
  }
  if (part.resolved().size() != 3 || part.unresolved().size() != 2) {
    throw UsageError("reduced model needs 3 resolved and 2 unresolved variables");
  }
  const Eigen::Vector2d anchor(part.anchor()[0], part.anchor()[1]);

  ReducedState state{u_hat0, basis.evaluate_all({u_hat0.data(), 3})};
  const MemoryForcing forcing(tables, state.h0, cfg.memory);

  const std::size_t steps = step_count(cfg.t_end, cfg.dt);
  Trajectory traj(cfg.dt * static_cast<double>(cfg.output_stride), reduced_labels());
  traj.reserve(steps / cfg.output_stride + 1);
  auto record = [&](double t) {
    const Eigen::Vector3d mem = forcing.at(t);
    const double row[6] = {state.u_hat[0], state.u_hat[1], state.u_hat[2], mem[0], mem[1], mem[2]};
    traj.push_back(row);
  };
  record(0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t_n = static_cast<double>(n) * cfg.dt;
    state = cfg.scheme == MemoryScheme::kExplicit
                ? step_reduced_explicit(state, t_n, cfg, forcing, p, anchor)
                : step_reduced_implicit(state, t_n, cfg, forcing, p, anchor);
    if ((n + 1) % cfg.output_stride == 0) record(static_cast<double>(n + 1) * cfg.dt);
  }
  return traj;
}

const VariableError& ErrorReport::at(const std::string& name) const {
  for (const auto& v : variables) {
    if (v.name == name) return v;
  }
  throw UsageError("error report has no variable '" + name + "'");
}

namespace {

// Brings both trajectories onto the coarser common grid.
std::pair<Trajectory, Trajectory> align(const Trajectory& a, const Trajectory& b) {
  const double ratio = a.dt() / b.dt();
  const double rounded = std::round(ratio >= 1.0 ? ratio : 1.0 / ratio);
  if (std::abs((ratio >= 1.0 ? ratio : 1.0 / ratio) - rounded) > 1e-6 || rounded < 1.0) {
    throw UsageError("trajectory grids are incompatible (dt ratio is not an integer)");
  }
  const auto stride = static_cast<std::size_t>(rounded);
  Trajectory ra = ratio >= 1.0 ? a : a.subsample(stride);
  Trajectory rb = ratio >= 1.0 ? b.subsample(stride) : b;
  if (std::abs(ra.end_time() - rb.end_time()) > 1e-9 * std::max(1.0, ra.end_time()) + 0.5 * ra.dt()) {
    throw UsageError("trajectories cover different horizons");
  }
  return {std::move(ra), std::move(rb)};
}

}  // namespace

ErrorReport compare_trajectories(const Trajectory& reference, const Trajectory& candidate,
                                 const std::vector<std::string>& vars, double bound_factor) {
  const auto [ref, cand] = align(reference, candidate);
  const std::size_t n = std::min(ref.size(), cand.size());
  ErrorReport report;
  for (const auto& name : vars) {
    const std::size_t ka = ref.column_index(name), kb = cand.column_index(name);
    double diff2 = 0.0, ref2 = 0.0, sup = 0.0, ref_max = 0.0, cand_max = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = ref.value(i, ka), y = cand.value(i, kb);
      if (!std::isfinite(y)) finite = false;
      const double d = y - x;
      diff2 += d * d;
      ref2 += x * x;
      sup = std::max(sup, std::abs(d));
      ref_max = std::max(ref_max, std::abs(x));
      cand_max = std::max(cand_max, std::abs(y));
    }
    VariableError e;
    e.name = name;
    e.sup = finite ? sup : std::numeric_limits<double>::infinity();
    e.relative_l2 = finite ? (ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2))
                           : std::numeric_limits<double>::infinity();
    report.variables.push_back(e);
    if (!finite || cand_max > bound_factor * ref_max) report.bounded = false;
  }
  return report;
}

double sup_error_until(const Trajectory& reference, const Trajectory& candidate,
                       const std::vector<std::string>& vars, double t) {
  const auto [ref, cand] = align(reference, candidate);
  const std::size_t n = std::min(ref.size(), cand.size());
  double sup = 0.0;
  for (const auto& name : vars) {
    const std::size_t ka = ref.column_index(name), kb = cand.column_index(name);
    for (std::size_t i = 0; i < n && ref.time(i) <= t + 1e-12; ++i) {
      const double d = std::abs(cand.value(i, kb) - ref.value(i, ka));
      if (!std::isfinite(d)) return std::numeric_limits<double>::infinity();
      sup = std::max(sup, d);
    }
  }
  return sup;
}

}  // namespace mzgrid

#include "mzgrid/heat_bath.hpp"

#include <cmath>
#include <string>

#include "mzgrid/errors.hpp"

namespace mzgrid {

BathParams BathParams::defaults(std::size_t n_osc) {
  BathParams bp;
  for (std::size_t j = 1; j <= n_osc; ++j) {
    const double jd = static_cast<double>(j);
    bp.gammas.push_back(1.0 / (jd / 3.0 + 1.0));
    bp.omegas.push_back(jd);
  }
  bp.potential = [](double x) { return std::cos(2.0 * x); };
  bp.potential_derivative = [](double x) { return -2.0 * std::sin(2.0 * x); };
  return bp;
}

void BathParams::validate() const {
  if (gammas.size() != omegas.size())
    throw ConfigError("bath: gammas and omegas differ in length");
  for (double w : omegas)
    if (!(w > 0.0)) throw ConfigError("bath: oscillator frequencies must be positive");
  for (double g : gammas)
    if (!std::isfinite(g)) throw ConfigError("bath: coupling strengths must be finite");
  if (!(mass > 0.0)) throw ConfigError("bath: particle mass must be positive");
  if (!potential || !potential_derivative) throw ConfigError("bath: potential not set");
}

bool FullBathState::all_finite() const {
  if (!std::isfinite(x) || !std::isfinite(p)) return false;
  for (double v : q)
    if (!std::isfinite(v)) return false;
  for (double v : pq)
    if (!std::isfinite(v)) return false;
  return true;
}

FullBathState bath_initial_state(std::size_t n_osc) {
  FullBathState s;
  s.x = 0.0;
  s.p = 1.0;
  s.q.assign(n_osc, 1.0);
  s.pq.assign(n_osc, 1.0);
  return s;
}

namespace {

void check_sizes(const FullBathState& s, const BathParams& bp) {
  if (s.q.size() != bp.n_osc() || s.pq.size() != bp.n_osc())
    throw UsageError("bath state size does not match the number of oscillators");
}

}  // namespace

FullBathState full_bath_rhs(const FullBathState& s, const BathParams& bp) {
  check_sizes(s, bp);
  const std::size_t n = bp.n_osc();
  FullBathState d;
  d.q.resize(n);
  d.pq.resize(n);
  d.x = s.p / bp.mass;
  double force = -bp.potential_derivative(s.x);
  for (std::size_t j = 0; j < n; ++j) {
    const double g = bp.gammas[j], w2 = bp.omegas[j] * bp.omegas[j];
    force += g * (s.q[j] - g / w2 * s.x);
    d.q[j] = s.pq[j];
    d.pq[j] = -w2 * s.q[j] + g * s.x;
  }
  d.p = force;
  return d;
}

double bath_hamiltonian(const FullBathState& s, const BathParams& bp) {
  check_sizes(s, bp);
  double h = 0.5 * s.p * s.p / bp.mass + bp.potential(s.x);
  for (std::size_t j = 0; j < bp.n_osc(); ++j) {
    const double w2 = bp.omegas[j] * bp.omegas[j];
    const double shift = s.q[j] - bp.gammas[j] / w2 * s.x;
    h += 0.5 * s.pq[j] * s.pq[j] + 0.5 * w2 * shift * shift;
  }
  return h;
}

namespace {

std::vector<std::string> bath_labels(std::size_t n, bool include_bath) {
  std::vector<std::string> labels{"x", "p"};
  if (include_bath) {
    for (std::size_t j = 1; j <= n; ++j) labels.push_back("q" + std::to_string(j));
    for (std::size_t j = 1; j <= n; ++j) labels.push_back("pq" + std::to_string(j));
  }
  return labels;
}

void check_step(double dt, double t_end) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw UsageError("dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw UsageError("t_end must be non-negative");
}

}  // namespace

Trajectory simulate_full_bath(const FullBathState& s0, const BathParams& bp, double dt, double t_end,
                              std::size_t stride, bool include_bath) {
  bp.validate();
  check_sizes(s0, bp);
  check_step(dt, t_end);
  if (stride == 0) throw UsageError("stride must be positive");
  const std::size_t n = bp.n_osc();
  const std::size_t steps = step_count(t_end, dt);
  Trajectory traj(dt * static_cast<double>(stride), bath_labels(n, include_bath));
  traj.reserve(steps / stride + 1);

  std::vector<double> row;
  auto record = [&](const FullBathState& s) {
    row.assign({s.x, s.p});
    if (include_bath) {
      row.insert(row.end(), s.q.begin(), s.q.end());
      row.insert(row.end(), s.pq.begin(), s.pq.end());
    }
    traj.push_back(row);
  };

  FullBathState s = s0;
  record(s);
  for (std::size_t k = 0; k < steps; ++k) {
    const FullBathState d = full_bath_rhs(s, bp);
    s.x += dt * d.x;
    s.p += dt * d.p;
    for (std::size_t j = 0; j < n; ++j) {
      s.q[j] += dt * d.q[j];
      s.pq[j] += dt * d.pq[j];
    }
    if (!s.all_finite()) throw IntegrationError("full bath state became non-finite", (k + 1) * dt);
    if ((k + 1) % stride == 0) record(s);
  }
  return traj;
}

double memory_kernel_K(double t, const BathParams& bp) {
  double k = 0.0;
  for (std::size_t j = 0; j < bp.n_osc(); ++j) {
    const double w = bp.omegas[j], g = bp.gammas[j];
    k += g * g / (w * w) * std::cos(w * t);
  }
  return k;
}

double noise_F_p(double t, const FullBathState& s0, const BathParams& bp) {
  check_sizes(s0, bp);
  double f = 0.0;
  for (std::size_t j = 0; j < bp.n_osc(); ++j) {
    const double w = bp.omegas[j], g = bp.gammas[j];
    f += g * s0.pq[j] * std::sin(w * t) / w;
    f += g * (s0.q[j] - g / (w * w) * s0.x) * std::cos(w * t);
  }
  return f;
}

double bath_closed_form_q(double t, std::size_t j, std::span<const double> x_history, double dt,
                          const FullBathState& s0, const BathParams& bp) {
  check_sizes(s0, bp);
  if (j >= bp.n_osc()) throw UsageError("oscillator index out of range");
  if (!(dt > 0.0) || t < 0.0) throw UsageError("closed-form q needs dt > 0 and t >= 0");
  const double steps = std::round(t / dt);
  if (std::abs(steps * dt - t) > 1e-9 * std::max(1.0, t))
    throw UsageError("closed-form q: t is not on the history grid");
  const auto n = static_cast<std::size_t>(steps);
  if (x_history.size() < n + 1) throw UsageError("closed-form q: x history does not cover [0, t]");

  const double w = bp.omegas[j], g = bp.gammas[j];
  double conv = 0.0;
  if (n > 0) {
    for (std::size_t i = 0; i <= n; ++i) {
      const double weight = (i == 0 || i == n) ? 0.5 : 1.0;
      conv += weight * x_history[i] * std::sin(w * (t - static_cast<double>(i) * dt));
    }
    conv *= dt;
  }
  return s0.q[j] * std::cos(w * t) + s0.pq[j] * std::sin(w * t) / w + g / w * conv;
}

Trajectory simulate_reduced_particle(const FullBathState& s0, const BathParams& bp, double dt,
                                     double t_end, const ReducedParticleOptions& opts,
                                     std::size_t stride) {
  bp.validate();
  check_sizes(s0, bp);
  check_step(dt, t_end);
  if (stride == 0) throw UsageError("stride must be positive");
  if (!(opts.t_memory >= 0.0)) throw UsageError("t_memory must be non-negative");

  const std::size_t steps = step_count(t_end, dt);
  const bool infinite = std::isinf(opts.t_memory);
  const std::size_t mem_steps =
      infinite ? steps : std::min(steps, static_cast<std::size_t>(std::llround(opts.t_memory / dt)));

  std::vector<double> kernel(mem_steps + 1, 0.0);
  if (opts.use_kernel)
    for (std::size_t i = 0; i <= mem_steps; ++i) kernel[i] = memory_kernel_K(static_cast<double>(i) * dt, bp);

  // momentum history as a ring buffer of the last mem_steps + 1 values
  const std::size_t cap = mem_steps + 1;
  std::vector<double> history(cap, 0.0);
  auto past = [&](std::size_t n, std::size_t i) { return history[(n - i) % cap]; };

  Trajectory traj(dt * static_cast<double>(stride), {"x", "p"});
  traj.reserve(steps / stride + 1);

  double x = s0.x, p = s0.p;
  traj.push_back(std::vector<double>{x, p});
  for (std::size_t n = 0; n < steps; ++n) {
    history[n % cap] = p;
    const double t = static_cast<double>(n) * dt;
    const std::size_t len = std::min(n, mem_steps);
    double conv = 0.0;
    if (len > 0) {
      conv = 0.5 * kernel[0] * past(n, 0);
      for (std::size_t i = 1; i < len; ++i) conv += kernel[i] * past(n, i);
      conv += 0.5 * kernel[len] * past(n, len);
      conv *= dt;
    }
    const double noise = opts.use_noise ? noise_F_p(t, s0, bp) : 0.0;
    const double dp = -bp.potential_derivative(x) - conv / bp.mass + noise;
    const double dx = p / bp.mass;
    x += dt * dx;
    p += dt * dp;
    if (!std::isfinite(x) || !std::isfinite(p))
      throw IntegrationError("reduced particle state became non-finite", t + dt);
    if ((n + 1) % stride == 0) traj.push_back(std::vector<double>{x, p});
  }
  return traj;
}

}  // namespace mzgrid

#pragma once

// Time-domain multi-machine swing simulation used to cross-check the
// algebraic initial RoCoF. Generators are undamped, governor-free inertias;
// the network is algebraic and solved for the load-bus angles at every
// right-hand-side evaluation:
//
//   d(delta_i)/dt = omega_i
//   d(omega_i)/dt = 2 pi * ( -f0 * dPe_i / (2 H_i) )
//   B_BB theta_D = dP_D - B_BG delta,   dPe = s_base (B_GG delta + B_GB theta_D)
//
// Integrated with classical fixed-step RK4.

#include <rocof/error.hpp>
#include <rocof/grid_model.hpp>
#include <rocof/rocof_engine.hpp>
#include <rocof/susceptance.hpp>

#include <cmath>
#include <numbers>
#include <ostream>
#include <span>

namespace rocof {

inline constexpr double kStepErrorTolerance = 1e-6;

class StepSizeRejected : public ArgumentError {
public:
  using ArgumentError::ArgumentError;
};

struct SimulationState {
  Vector delta_g;  // rad
  Vector omega_g;  // rad/s
  Vector theta_d;  // rad, algebraic
  double t = 0.0;
};

struct SimulationTrace {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<BusId> bus_ids;  // generators then loads
  std::vector<BusKind> bus_kinds;
  Matrix freq_hz;              // samples x buses, deviation from f0
  Matrix rocof_hz_per_s;       // samples x buses
  Vector gen_power_sum_mw;     // total electrical power change of the machines
  double p_dis_mw = 0.0;

  std::size_t num_samples() const noexcept { return t.size(); }
};

namespace detail {

class SwingSystem {
public:
  SwingSystem(const GridModel& grid, const SusceptanceBlocks& blocks, const Disturbance& d,
              std::span<const double> inertia)
      : blocks_(blocks), f0_(grid.f0_hz), s_base_(grid.s_base_mva) {
    const auto j = blocks.load_index().find(d.bus);
    if (j == blocks.load_index().end())
      throw ArgumentError("disturbance bus '" + d.bus.value + "' is not a load bus");
    injection_ = Vector::Zero(blocks.num_loads());
    injection_[j->second] = -d.p_dis_mw / s_base_;
    const auto n = blocks.num_generators();
    accel_ = Vector(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = inertia[static_cast<std::size_t>(i)];
      if (!(std::isfinite(h) && h > 0.0)) throw ArgumentError("generator without inertia in swing simulation");
      accel_[i] = -2.0 * std::numbers::pi * f0_ / (2.0 * h);
    }
  }

  Eigen::Index n() const { return blocks_.num_generators(); }

  Vector theta(const Vector& delta) const { return blocks_.solve(Vector(injection_ - blocks_.b_bg() * delta)); }

  // theta(delta) - theta(0), solved directly. Subtracting the two full
  // solutions would cancel most digits, since the step offset dominates.
  Vector theta_deviation(const Vector& delta) const { return blocks_.solve(Vector(-(blocks_.b_bg() * delta))); }

  Vector electrical_power_mw(const Vector& delta, const Vector& theta_d) const {
    return s_base_ * (blocks_.b_gg() * delta + blocks_.b_gb() * theta_d);
  }

  // x = [delta; omega]
  Vector rhs(const Vector& x) const {
    const auto nn = n();
    const Vector delta = x.head(nn);
    const Vector pe = electrical_power_mw(delta, theta(delta));
    Vector dx(2 * nn);
    dx.head(nn) = x.tail(nn);
    dx.tail(nn) = accel_.cwiseProduct(pe);
    return dx;
  }

  Vector rk4_step(const Vector& x, double h) const {
    const Vector k1 = rhs(x);
    const Vector k2 = rhs(x + 0.5 * h * k1);
    const Vector k3 = rhs(x + 0.5 * h * k2);
    const Vector k4 = rhs(x + h * k3);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

private:
  const SusceptanceBlocks& blocks_;
  double f0_;
  double s_base_;
  Vector injection_;
  Vector accel_;
};

// Derivative of uniformly sampled data: central differences inside,
// second-order one-sided stencils at both ends.
inline Matrix differentiate_columns(const Matrix& y, double dt) {
  const auto s = y.rows();
  Matrix d = Matrix::Zero(s, y.cols());
  if (s < 3) return d;
  for (Eigen::Index k = 1; k + 1 < s; ++k) d.row(k) = (y.row(k + 1) - y.row(k - 1)) / (2.0 * dt);
  d.row(0) = (-3.0 * y.row(0) + 4.0 * y.row(1) - y.row(2)) / (2.0 * dt);
  d.row(s - 1) = (3.0 * y.row(s - 1) - 4.0 * y.row(s - 2) + y.row(s - 3)) / (2.0 * dt);
  return d;
}

}  // namespace detail

/// Simulates the response to a load step from t = 0+ (rotor angles still at
/// zero, network already redistributed). A zero-size step is allowed and
/// yields a flat trace. `inertia_mws` defaults to each unit's h0.
inline SimulationTrace simulate_swing(const GridModel& grid, const Disturbance& d, double horizon_s, double dt_s,
                                      std::span<const double> inertia_mws = {}) {
  if (!(std::isfinite(dt_s) && dt_s > 0.0)) throw ArgumentError("time step must be positive");
  if (!(std::isfinite(horizon_s) && dt_s <= horizon_s / 100.0 * (1.0 + 1e-12)))
    throw ArgumentError("time step must not exceed horizon / 100");
  if (!(std::isfinite(d.p_dis_mw) && d.p_dis_mw >= 0.0)) throw ArgumentError("disturbance size must be >= 0");

  const auto blocks = assemble_blocks(grid);
  certify_invertible(blocks);
  const auto h0 = synchronous_inertia(grid);
  const std::span<const double> inertia = inertia_mws.empty() ? std::span<const double>(h0) : inertia_mws;
  if (inertia.size() != grid.num_generators()) throw ArgumentError("inertia vector length mismatch");
  const detail::SwingSystem sys(grid, blocks, d, inertia);

  const auto n = blocks.num_generators();
  const auto m = blocks.num_loads();
  const auto steps = static_cast<Eigen::Index>(std::llround(horizon_s / dt_s));
  const auto samples = steps + 1;

  SimulationTrace trace;
  trace.dt = dt_s;
  trace.p_dis_mw = d.p_dis_mw;
  trace.bus_ids = blocks.generator_ids();
  trace.bus_ids.insert(trace.bus_ids.end(), blocks.load_ids().begin(), blocks.load_ids().end());
  trace.bus_kinds.assign(static_cast<std::size_t>(n), BusKind::generator);
  trace.bus_kinds.insert(trace.bus_kinds.end(), static_cast<std::size_t>(m), BusKind::load);
  trace.freq_hz = Matrix::Zero(samples, n + m);
  trace.gen_power_sum_mw = Vector::Zero(samples);
  Matrix theta_dev(samples, m);  // load angles relative to t = 0+

  SimulationState state{Vector::Zero(n), Vector::Zero(n), sys.theta(Vector::Zero(n)), 0.0};
  Vector x(2 * n);
  const double two_pi = 2.0 * std::numbers::pi;

  auto record = [&](Eigen::Index k) {
    trace.t.push_back(state.t);
    trace.freq_hz.row(k).head(n) = (state.omega_g / two_pi).transpose();
    theta_dev.row(k) = sys.theta_deviation(state.delta_g).transpose();
    trace.gen_power_sum_mw[k] = sys.electrical_power_mw(state.delta_g, state.theta_d).sum();
  };
  record(0);
  for (Eigen::Index k = 1; k < samples; ++k) {
    x << state.delta_g, state.omega_g;
    const Vector full = sys.rk4_step(x, dt_s);
    const Vector half = sys.rk4_step(sys.rk4_step(x, 0.5 * dt_s), 0.5 * dt_s);
    const double err = (full - half).lpNorm<Eigen::Infinity>() / 15.0;
    const double size = full.lpNorm<Eigen::Infinity>();
    if (err > kStepErrorTolerance * size)
      throw StepSizeRejected("local truncation error " + std::to_string(err) + " exceeds tolerance at t = " +
                             std::to_string(state.t) + " s; reduce dt");
    state.delta_g = full.head(n);
    state.omega_g = full.tail(n);
    state.theta_d = sys.theta(state.delta_g);
    state.t = static_cast<double>(k) * dt_s;
    record(k);
  }

  trace.freq_hz.rightCols(m) = detail::differentiate_columns(theta_dev, dt_s) / two_pi;
  trace.rocof_hz_per_s = detail::differentiate_columns(trace.freq_hz, dt_s);
  if (!trace.freq_hz.allFinite() || !trace.rocof_hz_per_s.allFinite())
    throw InternalConsistencyError("non-finite values in swing trace");
  return trace;
}

/// Forward-difference slope of frequency over the first two steps,
/// (f(2 dt) - f(0)) / (2 dt), per bus.
inline Vector initial_rocof_estimate(const SimulationTrace& trace) {
  if (trace.num_samples() < 5) throw ArgumentError("trace too short for an initial RoCoF estimate");
  return (trace.freq_hz.row(2) - trace.freq_hz.row(0)).transpose() / (2.0 * trace.dt);
}

namespace detail {

inline void write_trace_matrix(const SimulationTrace& trace, const Matrix& values, std::ostream& os) {
  os << "t_s";
  for (const auto& id : trace.bus_ids) os << ',' << id;
  os << '\n';
  char buf[64];
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    std::snprintf(buf, sizeof buf, "%.9g", trace.t[static_cast<std::size_t>(k)]);
    os << buf;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.9g", values(k, c));
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace detail

/// t_s, then one frequency-deviation column (Hz) per bus.
inline void write_trace_csv(const SimulationTrace& trace, std::ostream& os) {
  detail::write_trace_matrix(trace, trace.freq_hz, os);
}

/// Companion file: same layout, RoCoF (Hz/s) per bus.
inline void write_trace_rocof_csv(const SimulationTrace& trace, std::ostream& os) {
  detail::write_trace_matrix(trace, trace.rocof_hz_per_s, os);
}

}  // namespace rocof

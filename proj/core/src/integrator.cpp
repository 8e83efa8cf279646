#include "rpavg/integrator.hpp"

#include <cmath>

#include "rpavg/error.hpp"

namespace rpavg {

namespace {

// out = y + drift dt + sigma dW, accumulated in that order for every caller.
inline void em_combine(const Vector& y, const Matrix& drift, const Matrix& sigma, const double* dw,
                       double dt, Vector& out) {
  const Eigen::Index n = y.size();
  const Eigen::Index m = sigma.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = y[i] + drift(i, 0) * dt;
    for (Eigen::Index k = 0; k < m; ++k) acc += sigma(i, k) * dw[k];
    out[i] = acc;
  }
}

}  // namespace

void check_state(double t, const Vector& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y[i];
    if (!std::isfinite(v) || std::abs(v) > kBlowupThreshold) throw NumericalBlowup(t, y);
  }
}

Vector em_step(const Vector& state, double t, const VectorField& drift,
               const VectorField& diffusion, const Vector& dW, double dt) {
  if (drift.rows != state.size() || diffusion.rows != state.size() || diffusion.cols != dW.size())
    throw InvalidArgument("em_step: dimension mismatch");
  const Vector no_x;
  Matrix a(drift.rows, 1);
  Matrix s(diffusion.rows, diffusion.cols);
  drift.eval(t, no_x, state, a);
  diffusion.eval(t, no_x, state, s);
  Vector out(state.size());
  em_combine(state, a, s, dW.data(), dt, out);
  check_state(t + dt, out);
  return out;
}

FastStepper::FastStepper(const SlowFastSystem& system, const BrownianPath& path)
    : sys_(&system),
      path_(&path),
      dt_(path.dt()),
      period_(period_steps(system, path.dt())),
      x_(Vector::Zero(system.d)),
      drift_(system.N, 1),
      sigma_(system.N, system.sigma.cols),
      dw_(system.sigma.cols),
      next_(system.N),
      sigma_const_(!system.sigma.reads(kArgT) && !system.sigma.reads(kArgY)) {
  if (path.dims() != system.noise_dims())
    throw InvalidArgument("path dimension does not match the number of sigma columns");
}

void FastStepper::set_x(const Vector& x) {
  x_ = x;
  if (sys_->sigma.reads(kArgX)) sigma_ready_ = false;
}

void FastStepper::step(Vector& y, std::int64_t phase, std::int64_t inc) {
  const double t = phase_time(phase);
  sys_->b.eval(t, x_, y, drift_);
  if (!sigma_ready_) {
    sys_->sigma.eval(t, x_, y, sigma_);
    sigma_ready_ = sigma_const_;
  }
  path_->increment(inc, dw_.data());
  em_combine(y, drift_, sigma_, dw_.data(), dt_, next_);
  y.swap(next_);
  check_state(static_cast<double>(inc + 1) * dt_, y);
}

Trajectory simulate_fast(const SlowFastSystem& system, const Vector& x_frozen, const Vector& y0,
                         const BrownianPath& path, double t0, double t1) {
  const std::int64_t i0 = grid_steps(t0, path.dt(), "t0");
  const std::int64_t i1 = grid_steps(t1, path.dt(), "t1");
  if (i1 <= i0) throw InvalidArgument("simulate_fast requires t0 < t1");
  if (y0.size() != system.N) throw InvalidArgument("y0 has the wrong dimension");
  FastStepper st(system, path);
  st.set_x(x_frozen);
  Trajectory traj;
  traj.t0 = static_cast<double>(i0) * path.dt();
  traj.dt = path.dt();
  traj.states.reserve(static_cast<std::size_t>(i1 - i0 + 1));
  traj.states.push_back(y0);
  Vector y = y0;
  st.run(y, wrap_phase(i0, st.period()), i0, i1 - i0,
         [&](std::int64_t, std::int64_t, const Vector& v) { traj.states.push_back(v); });
  return traj;
}

SlowFastTrajectory simulate_slow_fast(const SlowFastSystem& system, const Vector& x0,
                                      const Vector& y0, const BrownianPath& path,
                                      double T_over_eps, std::int64_t start_phase) {
  const std::int64_t n = grid_steps(T_over_eps, path.dt(), "T/eps");
  if (n < 1) throw InvalidArgument("simulate_slow_fast requires a positive horizon");
  if (x0.size() != system.d || y0.size() != system.N)
    throw InvalidArgument("initial state has the wrong dimension");
  FastStepper st(system, path);
  const double dt = path.dt();
  const double eps = system.epsilon;
  SlowFastTrajectory out;
  out.slow.dt = out.fast.dt = dt;
  out.slow.states.reserve(static_cast<std::size_t>(n + 1));
  out.fast.states.reserve(static_cast<std::size_t>(n + 1));
  Vector x = x0;
  Vector y = y0;
  out.slow.states.push_back(x);
  out.fast.states.push_back(y);
  Matrix f(system.d, 1);
  std::int64_t phase = wrap_phase(start_phase, st.period());
  for (std::int64_t i = 0; i < n; ++i) {
    system.F.eval(st.phase_time(phase), x, y, f);
    st.set_x(x);
    st.step(y, phase, i);
    for (int k = 0; k < system.d; ++k) x[k] += eps * f(k, 0) * dt;
    check_state(static_cast<double>(i + 1) * dt, x);
    if (++phase == st.period()) phase = 0;
    out.slow.states.push_back(x);
    out.fast.states.push_back(y);
  }
  return out;
}

LiftedState lifted_flow(const SlowFastSystem& system, const Vector& x_frozen,
                        const LiftedState& y0, const BrownianPath& path, double t) {
  const std::int64_t n = grid_steps(t, path.dt(), "t");
  if (n < 0) throw InvalidArgument("lifted_flow requires t >= 0");
  FastStepper st(system, path);
  st.set_x(x_frozen);
  Vector y = y0.y;
  const std::int64_t phase0 = wrap_phase(y0.phase, st.period());
  st.run(y, phase0, 0, n, [](std::int64_t, std::int64_t, const Vector&) {});
  return make_lifted(wrap_phase(phase0 + n, st.period()), path.dt(), std::move(y));
}

}  // namespace rpavg

#pragma once

#include <cstdint>
#include <utility>

#include "rpavg/noise.hpp"
#include "rpavg/system.hpp"

namespace rpavg {

inline constexpr double kBlowupThreshold = 1e12;

// Throws NumericalBlowup if any coordinate is non-finite or above the threshold.
void check_state(double t, const Vector& y);

// state + drift(t, state) dt + diffusion(t, state) dW; the fields receive an
// empty x.
Vector em_step(const Vector& state, double t, const VectorField& drift,
               const VectorField& diffusion, const Vector& dW, double dt);

// Euler-Maruyama stepping of the frozen fast equation. Coefficients are
// evaluated at the reduced phase time (phase mod P) * dt, which makes the
// tau-shift and cocycle identities hold bit for bit.
class FastStepper {
 public:
  FastStepper(const SlowFastSystem& system, const BrownianPath& path);

  void set_x(const Vector& x);
  const Vector& x() const { return x_; }
  std::int64_t period() const { return period_; }
  double dt() const { return dt_; }
  double phase_time(std::int64_t phase) const { return static_cast<double>(phase) * dt_; }

  // One step from circle position `phase` using the increment at index `inc`.
  void step(Vector& y, std::int64_t phase, std::int64_t inc);

  // n steps starting at (phase0, inc0); visit(j, phase, y) is called after
  // step j = 1..n with the phase reached.
  template <class Visit>
  void run(Vector& y, std::int64_t phase0, std::int64_t inc0, std::int64_t n, Visit&& visit) {
    std::int64_t phase = phase0;
    for (std::int64_t j = 0; j < n; ++j) {
      step(y, phase, inc0 + j);
      if (++phase == period_) phase = 0;
      visit(j + 1, phase, std::as_const(y));
    }
  }

 private:
  const SlowFastSystem* sys_;
  const BrownianPath* path_;
  double dt_;
  std::int64_t period_;
  Vector x_;
  Matrix drift_;
  Matrix sigma_;
  Vector dw_;
  Vector next_;
  bool sigma_const_;
  bool sigma_ready_ = false;
};

inline std::int64_t wrap_phase(std::int64_t i, std::int64_t period) {
  const std::int64_t r = i % period;
  return r < 0 ? r + period : r;
}

// Frozen fast subsystem on [t0, t1], increments taken at absolute indices.
Trajectory simulate_fast(const SlowFastSystem& system, const Vector& x_frozen, const Vector& y0,
                         const BrownianPath& path, double t0, double t1);

struct SlowFastTrajectory {
  Trajectory slow;
  Trajectory fast;
};

// Coupled system on [0, T_over_eps] starting at circle position start_phase.
SlowFastTrajectory simulate_slow_fast(const SlowFastSystem& system, const Vector& x0,
                                      const Vector& y0, const BrownianPath& path,
                                      double T_over_eps, std::int64_t start_phase = 0);

// Phi(t, omega, (s, y)) = (t + s mod tau, Y_{s, s+t}(theta_{-s} omega)).
LiftedState lifted_flow(const SlowFastSystem& system, const Vector& x_frozen,
                        const LiftedState& y0, const BrownianPath& path, double t);

}  // namespace rpavg

#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "rpavg/noise.hpp"
#include "rpavg/system.hpp"

namespace rpavg {

struct PullbackConfig {
  int k_max = 40;
  double tol = 1e-6;
  std::optional<LiftedState> anchor;  // default (0, 0)
  int window_periods = 1;
  // Steps r at which the solution is recorded, sorted, within
  // [0, window_periods * P]. Empty means every step of the window.
  std::vector<std::int64_t> r_steps;
};

struct PeriodicSolutionEstimate {
  Vector x_frozen;
  std::vector<double> r_grid;
  std::vector<std::int64_t> r_steps;
  std::vector<LiftedState> values;
  int k_used = 0;
  std::vector<double> sup_diffs;  // entry k-1 compares iterate k with k-1
  double rate_estimate = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  PullbackConfig config;
  double dt = 0.0;
  std::int64_t period = 0;
};

// Iterate k is r -> Phi(r + k tau, theta_{-k tau} omega, anchor), re-simulated
// from -k tau each time. Stops once the sup over the r-grid of successive
// differences is below tol, or at k_max (converged = false).
PeriodicSolutionEstimate pullback_solve(const SlowFastSystem& system, const Vector& x_frozen,
                                        const BrownianPath& path, const PullbackConfig& config);

PeriodicSolutionEstimate pullback_solve(const SlowFastSystem& system, const Vector& x_frozen,
                                        const LiftedState& y_init, const BrownianPath& path,
                                        int k_max, double tol);

// Slope of log(sup_diffs) against k over the last half of the sequence;
// zero entries are skipped. NaN when fewer than two points remain.
double pullback_rate(const std::vector<double>& sup_diffs);

struct PeriodicityReport {
  double periodicity_residual = 0.0;  // sup_r |S(r+tau, w) - S(r, theta_tau w)|
  double cocycle_residual = 0.0;      // sup |Phi(t, theta_s w, S(s,w)) - S(t+s, w)|
  std::size_t cocycle_pairs = 0;
  double threshold = 0.0;             // tol + pullback tol
  bool periodicity_ok = false;
  bool cocycle_ok = false;
};

PeriodicityReport verify_random_periodicity(const PeriodicSolutionEstimate& estimate,
                                            const SlowFastSystem& system,
                                            const BrownianPath& path, double tol);

struct DecayRow {
  Vector perturbation;
  std::vector<double> diffs;      // |Phi(k tau, w, S(0)+delta) - S(0, theta_{k tau} w)|, k = 0..H
  std::vector<double> log_diffs;
  double slope_per_time = std::numeric_limits<double>::quiet_NaN();
};

// Slopes are fitted on entries with diff above 100 * pullback tol.
std::vector<DecayRow> stability_probe(const SlowFastSystem& system, const Vector& x_frozen,
                                      const PeriodicSolutionEstimate& estimate,
                                      const std::vector<Vector>& perturbations,
                                      const BrownianPath& path, int horizon_periods);

}  // namespace rpavg

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rpavg/integrator.hpp"
#include "rpavg/measures.hpp"
#include "rpavg/noise.hpp"
#include "rpavg/system.hpp"

namespace rpavg {

struct AverageEstimate {
  Vector value;
  Vector se;
};

// Time average of F(x, Y_t) along one fast trajectory started at y0 = 0,
// after burn-in; SE from batch means.
AverageEstimate averaged_drift_ergodic(const SlowFastSystem& system, const Vector& x, double T_erg,
                                       double burn_in, const BrownianPath& path,
                                       int n_batches = 32);

// Mean over sections of int F(x, y) mu_r(dy). With common samples the SE is the
// standard error over the per-sample section averages; otherwise the section
// variances are combined.
AverageEstimate averaged_drift_measure(const SlowFastSystem& system, const Vector& x,
                                       const SectionFamily& family);

enum class DriftMethod { kErgodic, kMeasure, kClosedForm };

std::string to_string(DriftMethod m);

using AveragedField = std::function<Vector(const Vector& x)>;

struct DriftBudgets {
  double dt = 1e-3;
  double T_erg = 1000.0;
  double burn_in = 10.0;
  int n_batches = 32;
  std::size_t n_samples = 200;
  std::size_t n_sections = 64;
  std::uint64_t base_seed = 1;
  PullbackConfig pullback;
  unsigned workers = 1;
  AveragedField closed_form;  // required for kClosedForm
};

// Tensor grid in d <= 2 with multilinear interpolation.
struct AveragedDriftTable {
  std::vector<std::vector<double>> axes;
  std::vector<Vector> values;  // first axis fastest
  std::vector<Vector> se;
  DriftMethod method = DriftMethod::kClosedForm;

  std::size_t size() const { return values.size(); }
  Vector node(std::size_t i) const;
  // Throws ExtrapolationError outside the grid.
  Vector evaluate(const Vector& x) const;
  AveragedField as_field() const;
};

AveragedDriftTable build_drift_table(const SlowFastSystem& system,
                                     const std::vector<std::vector<double>>& axes,
                                     DriftMethod method, const DriftBudgets& budgets);

// Classical RK4 for dX/dt = eps Fbar(X) on [0, T/eps].
Trajectory solve_averaged_ode(const AveragedField& fbar, const Vector& x0, double epsilon,
                              double T, double dt);
Trajectory solve_averaged_ode(const AveragedDriftTable& table, const Vector& x0, double epsilon,
                              double T, double dt);

struct PartitionScheme {
  double epsilon = 0.0;
  double T = 0.0;
  int n = 0;
  double t_eps = 0.0;       // T / (eps n), exact
  double dt = 0.0;
  double t_eps_grid = 0.0;  // t_eps rounded down to the grid
  std::int64_t total_steps = 0;
  std::vector<std::int64_t> block_starts;  // n + 1 boundaries, floor(j S / n)
};

// n = ceil(1 / (eps (ln 1/eps)^{1/4})). Requires 0 < eps < 1/e.
PartitionScheme hasminskii_partition(double epsilon, double T, double dt = 0.0);

// Same block layout with a caller-chosen number of blocks.
PartitionScheme partition_with_blocks(double epsilon, double T, int n, double dt);

// On each block the fast variable restarts from the true fast state and
// evolves with x frozen at the block's left endpoint, using the same
// increments and circle phase as the coupled run.
Trajectory auxiliary_process(const SlowFastSystem& system, const PartitionScheme& partition,
                             const Trajectory& x_traj, const Trajectory& y_traj,
                             const BrownianPath& path, std::int64_t start_phase = 0);

struct StudyConfig {
  double dt = 1e-3;
  std::uint64_t base_seed = 1;
  PullbackConfig pullback;
  std::size_t n_sections = 64;
  unsigned workers = 1;
};

struct AveragingErrorReport {
  double epsilon = 0.0;
  double T = 0.0;
  std::size_t n_mc = 0;
  std::vector<double> errors;
  double mean = 0.0;
  double se = 0.0;
  PartitionScheme partition;
  // Mean over runs of |eps int_block (F(X_j, Y) - Fbar(X_j)) dt| per block.
  std::vector<double> block_discrepancy;
};

struct AveragingStudy {
  std::vector<AveragingErrorReport> reports;
  bool monotone = true;  // no increase beyond 2 combined SE as eps decreases
  std::vector<std::size_t> violations;
  // gap[k] = mean over runs of error(eps_k) - error(eps_{k+1}), with its paired SE.
  std::vector<double> gap;
  std::vector<double> gap_se;
  bool strictly_decreasing = true;  // every gap at least one paired SE
};

// n_mc coupled runs per eps. Run i starts at x0 = x_grid[i mod G] with fast
// data S(s_i, w_i) drawn by pullback at a stratified section s_i, then
// continues on theta_{s_i} w_i so the initial state is independent of the
// future noise. Initial data and paths are shared across eps.
AveragingStudy averaging_error_study(const SlowFastSystem& system,
                                     const std::vector<Vector>& x_grid,
                                     const std::vector<double>& epsilons, double T,
                                     std::size_t n_mc, const AveragedField& fbar,
                                     const StudyConfig& config);

struct AuxiliaryGapReport {
  std::vector<int> n_blocks;
  std::vector<std::vector<double>> sup_sq;  // per n, per run: sup |Y - Yhat|^2
  std::vector<double> mean;
  std::vector<double> se;
  std::vector<double> paired_diff;     // mean[i] - mean[i+1]
  std::vector<double> paired_diff_se;
};

// sup |Y - Yhat|^2 for several block counts on common paths.
AuxiliaryGapReport auxiliary_gap_study(const SlowFastSystem& system, const Vector& x0,
                                       double epsilon, double T, const std::vector<int>& n_blocks,
                                       std::size_t n_mc, const StudyConfig& config);

}  // namespace rpavg

#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "rpavg/noise.hpp"
#include "rpavg/system.hpp"

namespace rpavg {

struct LyapunovHandle {
  std::function<double(double t, const Vector& y)> V;
  double p = 2.0;
  double C = 1.0;
};

// V(t, y) = |y|^2.
LyapunovHandle squared_norm_lyapunov();

struct ContractionReport {
  std::vector<std::pair<double, double>> lambda_samples;
  double beta_hat = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;  // beta_hat at T and at T/2 agree within 10%
  bool truncated = false;  // separation reached numerical zero
  double horizon = 0.0;    // time actually simulated
};

// Synchronous coupling: both copies use the same increments. lambda(t) is the
// slope of log V over windows of length `window`; beta_hat is the trapezoid
// estimate of (1/2t) int_0^t lambda.
ContractionReport coupling_rate(const SlowFastSystem& system, const Vector& x_frozen,
                                const Vector& y0, const Vector& z0, const LyapunovHandle& V,
                                const BrownianPath& path, double T, double window = 0.0);

struct SampleBox {
  Vector lo;
  Vector hi;
};

struct DissipativityTable {
  std::vector<double> t_grid;
  std::vector<double> K;
  std::vector<double> L;
  std::vector<double> lambda;
  std::size_t n_pairs = 0;
  double p = 2.0;
};

// Empirical one-sided Lipschitz constant K_t (inf of -<b(y)-b(z), y-z>/|y-z|^2),
// diffusion Lipschitz constant L_t, and lambda_t = -K_t + ((p-1)/2) N L_t^2,
// over uniformly drawn pairs in the box at the given x.
DissipativityTable dissipativity_constants(const SlowFastSystem& system, const Vector& x_frozen,
                                           const SampleBox& box, std::size_t n_pairs,
                                           std::size_t n_times = 16, double p = 2.0,
                                           std::uint64_t seed = 1);

using TimeField = std::function<Vector(double t, const Vector& y)>;

// Default central-difference step: cbrt(machine eps) * max(1, |y|).
double default_fd_step(const Vector& y);

// [F, G] = D_y G F - D_y F G by central-difference Jacobian-vector products.
// h <= 0 picks the default step.
Vector lie_bracket(const TimeField& F, const TimeField& G, double t, const Vector& y,
                   double h = 0.0);

struct RankResult {
  int rank = 0;
  int level = 0;
};

// Brackets Sigma_0 = {sigma_k}, Sigma_{l+1} = {[sigma_k, Z] : Z in Sigma_l} up
// to level M and returns the numerical rank of all collected vectors together
// with the first level at which that rank was reached.
RankResult hormander_rank(const std::vector<TimeField>& sigma_columns, double t, const Vector& y,
                          int max_level);

// Columns of sigma at frozen x as time fields.
std::vector<TimeField> sigma_columns(const SlowFastSystem& system, const Vector& x_frozen);

struct SemigroupProbeConfig {
  std::size_t n_paths = 1000;
  double dt = 1e-3;
  std::uint64_t base_seed = 1;
  unsigned workers = 1;
};

struct SemigroupRow {
  double distance = 0.0;
  double ratio = 0.0;
  double se = 0.0;
  bool inconclusive = false;
};

// |E phi(Phi(t, ., y)) - E phi(Phi(t, ., z))| / |y - z| with both starts driven
// by the same paths.
std::vector<SemigroupRow> semigroup_continuity_probe(
    const SlowFastSystem& system, const Vector& x_frozen,
    const std::function<double(const Vector&)>& phi,
    const std::vector<std::pair<LiftedState, LiftedState>>& pairs, double t,
    const SemigroupProbeConfig& config);

}  // namespace rpavg

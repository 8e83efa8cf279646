#include "rpavg/pullback.hpp"

#include <algorithm>
#include <cmath>

#include "rpavg/error.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/stats.hpp"

namespace rpavg {

namespace {

std::vector<std::int64_t> resolve_r_steps(const PullbackConfig& cfg, std::int64_t period) {
  if (cfg.window_periods < 1) throw InvalidArgument("pullback window must be at least one period");
  const std::int64_t last = cfg.window_periods * period;
  if (cfg.r_steps.empty()) {
    std::vector<std::int64_t> r(static_cast<std::size_t>(last + 1));
    for (std::int64_t i = 0; i <= last; ++i) r[static_cast<std::size_t>(i)] = i;
    return r;
  }
  if (!std::is_sorted(cfg.r_steps.begin(), cfg.r_steps.end()) || cfg.r_steps.front() < 0 ||
      cfg.r_steps.back() > last)
    throw InvalidArgument("pullback r_steps must be sorted and inside the window");
  return cfg.r_steps;
}

// Simulates from -k P with the anchor and records y at every requested r.
std::vector<Vector> run_iterate(FastStepper& st, const LiftedState& anchor, std::int64_t k,
                                const std::vector<std::int64_t>& rs) {
  const std::int64_t P = st.period();
  std::vector<Vector> out;
  out.reserve(rs.size());
  Vector y = anchor.y;
  std::int64_t pos = -k * P;
  std::int64_t phase = wrap_phase(anchor.phase, P);
  std::size_t m = 0;
  const std::int64_t end = rs.back();
  for (;;) {
    while (m < rs.size() && rs[m] == pos) {
      out.push_back(y);
      ++m;
    }
    if (pos == end) break;
    st.step(y, phase, pos);
    ++pos;
    if (++phase == P) phase = 0;
  }
  return out;
}

double sup_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double sup = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sup = std::max(sup, (a[i] - b[i]).norm());
  return sup;
}

}  // namespace

double pullback_rate(const std::vector<double>& sup_diffs) {
  std::vector<double> ks;
  std::vector<double> logs;
  const std::size_t start = sup_diffs.size() / 2;
  for (std::size_t i = start; i < sup_diffs.size(); ++i) {
    if (sup_diffs[i] > 0.0 && std::isfinite(sup_diffs[i])) {
      ks.push_back(static_cast<double>(i + 1));
      logs.push_back(std::log(sup_diffs[i]));
    }
  }
  return least_squares_slope(ks, logs);
}

PeriodicSolutionEstimate pullback_solve(const SlowFastSystem& system, const Vector& x_frozen,
                                        const BrownianPath& path, const PullbackConfig& config) {
  if (config.k_max < 2) throw InvalidArgument("pullback k_max must be at least 2");
  if (!(config.tol > 0.0)) throw InvalidArgument("pullback tol must be positive");
  FastStepper st(system, path);
  st.set_x(x_frozen);
  const std::int64_t P = st.period();
  const LiftedState anchor =
      config.anchor ? *config.anchor : make_lifted(0, path.dt(), Vector::Zero(system.N));
  if (anchor.y.size() != system.N) throw InvalidArgument("pullback anchor has the wrong dimension");

  PeriodicSolutionEstimate est;
  est.x_frozen = x_frozen;
  est.config = config;
  est.config.anchor = anchor;
  est.dt = path.dt();
  est.period = P;
  est.r_steps = resolve_r_steps(config, P);

  std::vector<Vector> prev = run_iterate(st, anchor, 0, est.r_steps);
  std::vector<Vector> cur;
  for (int k = 1; k <= config.k_max; ++k) {
    cur = run_iterate(st, anchor, k, est.r_steps);
    const double diff = sup_distance(cur, prev);
    est.sup_diffs.push_back(diff);
    est.k_used = k;
    prev.swap(cur);
    if (diff < config.tol) {
      est.converged = true;
      break;
    }
  }
  est.rate_estimate = pullback_rate(est.sup_diffs);

  const std::int64_t phase0 = wrap_phase(anchor.phase, P);
  est.r_grid.reserve(est.r_steps.size());
  est.values.reserve(est.r_steps.size());
  for (std::size_t i = 0; i < est.r_steps.size(); ++i) {
    est.r_grid.push_back(static_cast<double>(est.r_steps[i]) * path.dt());
    est.values.push_back(
        make_lifted(wrap_phase(phase0 + est.r_steps[i], P), path.dt(), std::move(prev[i])));
  }
  return est;
}

PeriodicSolutionEstimate pullback_solve(const SlowFastSystem& system, const Vector& x_frozen,
                                        const LiftedState& y_init, const BrownianPath& path,
                                        int k_max, double tol) {
  PullbackConfig cfg;
  cfg.k_max = k_max;
  cfg.tol = tol;
  cfg.anchor = y_init;
  return pullback_solve(system, x_frozen, path, cfg);
}

PeriodicityReport verify_random_periodicity(const PeriodicSolutionEstimate& estimate,
                                            const SlowFastSystem& system,
                                            const BrownianPath& path, double tol) {
  const std::int64_t P = estimate.period;
  PullbackConfig two = estimate.config;
  two.window_periods = 2;
  two.r_steps.clear();
  const auto wide = pullback_solve(system, estimate.x_frozen, path, two);

  PullbackConfig one = estimate.config;
  one.window_periods = 1;
  one.r_steps.clear();
  const auto shifted = pullback_solve(system, estimate.x_frozen, path.shifted(P), one);

  PeriodicityReport rep;
  rep.threshold = tol + estimate.config.tol;
  for (std::int64_t r = 0; r <= P; ++r) {
    const auto& a = wide.values[static_cast<std::size_t>(r + P)].y;
    const auto& b = shifted.values[static_cast<std::size_t>(r)].y;
    rep.periodicity_residual = std::max(rep.periodicity_residual, (a - b).norm());
  }

  // Phi(t, theta_s w, S(s, w)) against S(t + s, w) on a coarse lattice of (s, t).
  const std::int64_t q = std::max<std::int64_t>(1, P / 8);
  for (std::int64_t s = 0; s <= P; s += q) {
    for (std::int64_t t = 0; s + t <= 2 * P; t += q) {
      const LiftedState& start = wide.values[static_cast<std::size_t>(s)];
      const LiftedState moved = lifted_flow(system, estimate.x_frozen, start, path.shifted(s),
                                            static_cast<double>(t) * path.dt());
      const LiftedState& target = wide.values[static_cast<std::size_t>(s + t)];
      double res = (moved.y - target.y).norm();
      if (moved.phase != target.phase) res = std::numeric_limits<double>::infinity();
      rep.cocycle_residual = std::max(rep.cocycle_residual, res);
      ++rep.cocycle_pairs;
    }
  }
  rep.periodicity_ok = rep.periodicity_residual <= rep.threshold;
  rep.cocycle_ok = rep.cocycle_residual <= rep.threshold;
  return rep;
}

std::vector<DecayRow> stability_probe(const SlowFastSystem& system, const Vector& x_frozen,
                                      const PeriodicSolutionEstimate& estimate,
                                      const std::vector<Vector>& perturbations,
                                      const BrownianPath& path, int horizon_periods) {
  if (horizon_periods < 1) throw InvalidArgument("stability horizon must be positive");
  const std::int64_t P = estimate.period;
  PullbackConfig cfg = estimate.config;
  cfg.window_periods = horizon_periods;
  cfg.r_steps.clear();
  for (int k = 0; k <= horizon_periods; ++k) cfg.r_steps.push_back(k * P);
  const auto ref = pullback_solve(system, x_frozen, path, cfg);

  FastStepper st(system, path);
  st.set_x(x_frozen);
  std::vector<DecayRow> rows;
  for (const Vector& delta : perturbations) {
    DecayRow row;
    row.perturbation = delta;
    Vector y = ref.values[0].y + delta;
    const std::int64_t phase0 = ref.values[0].phase;
    row.diffs.push_back((y - ref.values[0].y).norm());
    for (int k = 1; k <= horizon_periods; ++k) {
      st.run(y, phase0, static_cast<std::int64_t>(k - 1) * P, P,
             [](std::int64_t, std::int64_t, const Vector&) {});
      row.diffs.push_back((y - ref.values[static_cast<std::size_t>(k)].y).norm());
    }
    std::vector<double> ts;
    std::vector<double> ls;
    for (std::size_t k = 0; k < row.diffs.size(); ++k) {
      const double dv = row.diffs[k];
      row.log_diffs.push_back(dv > 0.0 ? std::log(dv) : -std::numeric_limits<double>::infinity());
      if (dv > 100.0 * cfg.tol) {
        ts.push_back(static_cast<double>(k) * system.tau);
        ls.push_back(std::log(dv));
      }
    }
    row.slope_per_time = least_squares_slope(ts, ls);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace rpavg

#include "rpavg/diagnostics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rpavg/error.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/measures.hpp"
#include "rpavg/parallel.hpp"
#include "rpavg/stats.hpp"

namespace rpavg {

LyapunovHandle squared_norm_lyapunov() {
  return {[](double, const Vector& y) { return y.squaredNorm(); }, 2.0, 1.0};
}

namespace {

double trapezoid_beta(const std::vector<std::pair<double, double>>& lam, std::size_t count) {
  if (count == 0) return std::numeric_limits<double>::quiet_NaN();
  // lambda is extended flat back to t = 0.
  double acc = lam[0].first * lam[0].second;
  for (std::size_t k = 1; k < count; ++k)
    acc += 0.5 * (lam[k].second + lam[k - 1].second) * (lam[k].first - lam[k - 1].first);
  return acc / (2.0 * lam[count - 1].first);
}

}  // namespace

ContractionReport coupling_rate(const SlowFastSystem& system, const Vector& x_frozen,
                                const Vector& y0, const Vector& z0, const LyapunovHandle& V,
                                const BrownianPath& path, double T, double window) {
  if (y0.size() != system.N || z0.size() != system.N)
    throw InvalidArgument("coupling_rate: initial states have the wrong dimension");
  if (y0 == z0) throw InvalidArgument("coupling_rate requires y0 != z0");
  const double dt = path.dt();
  const std::int64_t n = grid_steps(T, dt, "T");
  if (window <= 0.0) window = std::max(dt, dt * std::floor(system.tau / 4.0 / dt));
  const std::int64_t w = std::max<std::int64_t>(1, grid_steps(window, dt, "window"));
  if (n < 2 * w) throw InvalidArgument("coupling_rate horizon must cover at least two windows");

  FastStepper sy(system, path);
  FastStepper sz(system, path);
  sy.set_x(x_frozen);
  sz.set_x(x_frozen);
  const std::int64_t P = sy.period();
  Vector y = y0;
  Vector z = z0;
  ContractionReport rep;
  double log_prev = std::log(V.V(0.0, y - z));
  std::int64_t phase = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    sy.step(y, phase, i);
    sz.step(z, phase, i);
    if (++phase == P) phase = 0;
    if ((i + 1) % w != 0) continue;
    const double t = static_cast<double>(i + 1) * dt;
    const Vector sep = y - z;
    const double v = V.V(sy.phase_time(phase), sep);
    if (!(v > 0.0) || sep.norm() <= 1e-12 * std::max(1.0, y.norm())) {
      rep.truncated = true;
      break;
    }
    const double lv = std::log(v);
    rep.lambda_samples.emplace_back(t, (lv - log_prev) / (static_cast<double>(w) * dt));
    log_prev = lv;
    rep.horizon = t;
  }
  const std::size_t K = rep.lambda_samples.size();
  rep.beta_hat = trapezoid_beta(rep.lambda_samples, K);
  const double half = trapezoid_beta(rep.lambda_samples, K / 2);
  rep.converged = K >= 2 && std::isfinite(rep.beta_hat) &&
                  std::abs(rep.beta_hat - half) <= 0.1 * std::abs(rep.beta_hat);
  return rep;
}

DissipativityTable dissipativity_constants(const SlowFastSystem& system, const Vector& x_frozen,
                                           const SampleBox& box, std::size_t n_pairs,
                                           std::size_t n_times, double p, std::uint64_t seed) {
  if (n_pairs < 100) throw InvalidArgument("dissipativity_constants needs at least 100 pairs");
  if (box.lo.size() != system.N || box.hi.size() != system.N || !((box.hi - box.lo).minCoeff() > 0.0))
    throw InvalidArgument("dissipativity sample box is degenerate");
  if (n_times < 1) throw InvalidArgument("dissipativity needs at least one time");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&] {
    Vector v(system.N);
    for (int i = 0; i < system.N; ++i) v[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unif(rng);
    return v;
  };
  std::vector<std::pair<Vector, Vector>> pairs;
  while (pairs.size() < n_pairs) {
    Vector a = draw();
    Vector b = draw();
    if ((a - b).norm() > 0.0) pairs.emplace_back(std::move(a), std::move(b));
  }
  DissipativityTable tab;
  tab.n_pairs = n_pairs;
  tab.p = p;
  Matrix ba(system.N, 1), bb(system.N, 1);
  Matrix sa(system.N, system.sigma.cols), sb(system.N, system.sigma.cols);
  for (std::size_t k = 0; k < n_times; ++k) {
    const double t = system.tau * static_cast<double>(k) / static_cast<double>(n_times);
    double K = std::numeric_limits<double>::infinity();
    double L = 0.0;
    for (const auto& [a, b] : pairs) {
      system.b.eval(t, x_frozen, a, ba);
      system.b.eval(t, x_frozen, b, bb);
      const Vector d = a - b;
      const double d2 = d.squaredNorm();
      K = std::min(K, -(ba.col(0) - bb.col(0)).dot(d) / d2);
      system.sigma.eval(t, x_frozen, a, sa);
      system.sigma.eval(t, x_frozen, b, sb);
      for (Eigen::Index c = 0; c < sa.cols(); ++c)
        L = std::max(L, (sa.col(c) - sb.col(c)).norm() / std::sqrt(d2));
    }
    tab.t_grid.push_back(t);
    tab.K.push_back(K);
    tab.L.push_back(L);
    tab.lambda.push_back(-K + 0.5 * (p - 1.0) * static_cast<double>(system.N) * L * L);
  }
  return tab;
}

double default_fd_step(const Vector& y) {
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, y.norm());
}

namespace {

// D_y G(t, y) v by a central difference along the unit direction of v.
Vector jvp(const TimeField& G, double t, const Vector& y, const Vector& v, double h) {
  const double nv = v.norm();
  if (nv == 0.0) return Vector::Zero(G(t, y).size());
  const Vector u = v / nv;
  return (G(t, y + h * u) - G(t, y - h * u)) * (nv / (2.0 * h));
}

}  // namespace

Vector lie_bracket(const TimeField& F, const TimeField& G, double t, const Vector& y, double h) {
  if (!y.allFinite()) throw InvalidArgument("lie_bracket at a non-finite point");
  if (h <= 0.0) h = default_fd_step(y);
  const Vector f = F(t, y);
  const Vector g = G(t, y);
  const Vector out = jvp(G, t, y, f, h) - jvp(F, t, y, g, h);
  if (!out.allFinite()) throw InvalidArgument("lie_bracket produced a non-finite value");
  return out;
}

RankResult hormander_rank(const std::vector<TimeField>& sigma_columns, double t, const Vector& y,
                          int max_level) {
  if (max_level < 0) throw InvalidArgument("hormander_rank needs max_level >= 0");
  if (sigma_columns.empty()) throw InvalidArgument("hormander_rank needs at least one field");
  const Eigen::Index N = y.size();
  std::vector<Vector> collected;
  double scale = 1.0;
  for (const auto& s : sigma_columns) {
    collected.push_back(s(t, y));
    scale = std::max(scale, collected.back().norm());
  }
  auto rank_of = [&] {
    Matrix A(N, static_cast<Eigen::Index>(collected.size()));
    for (std::size_t i = 0; i < collected.size(); ++i) A.col(static_cast<Eigen::Index>(i)) = collected[i];
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv[i] > 1e-8 * sv[0] ? 1 : 0;
    return r;
  };
  RankResult res{rank_of(), 0};
  std::vector<TimeField> level = sigma_columns;
  // Nested differences lose about three digits per level; smaller vectors
  // are treated as exact zeros.
  double floor = 1e-7 * scale;
  for (int l = 1; l <= max_level && res.rank < N; ++l) {
    std::vector<TimeField> next;
    for (const auto& s : sigma_columns)
      for (const auto& Z : level)
        next.push_back([s, Z](double tt, const Vector& yy) { return lie_bracket(s, Z, tt, yy); });
    for (const auto& f : next) {
      Vector v = f(t, y);
      if (v.norm() > floor) collected.push_back(std::move(v));
    }
    const int r = rank_of();
    if (r > res.rank) res = {r, l};
    level = std::move(next);
    floor *= 1e3;
  }
  return res;
}

std::vector<TimeField> sigma_columns(const SlowFastSystem& system, const Vector& x_frozen) {
  std::vector<TimeField> cols;
  for (Eigen::Index k = 0; k < system.sigma.cols; ++k) {
    cols.push_back([&system, x_frozen, k](double t, const Vector& y) {
      Matrix out(system.N, system.sigma.cols);
      system.sigma.eval(t, x_frozen, y, out);
      return Vector(out.col(k));
    });
  }
  return cols;
}

std::vector<SemigroupRow> semigroup_continuity_probe(
    const SlowFastSystem& system, const Vector& x_frozen,
    const std::function<double(const Vector&)>& phi,
    const std::vector<std::pair<LiftedState, LiftedState>>& pairs, double t,
    const SemigroupProbeConfig& config) {
  const std::int64_t n = grid_steps(t, config.dt, "t");
  if (n < 1) throw InvalidArgument("semigroup probe needs t >= dt");
  if (config.n_paths < 2) throw InvalidArgument("semigroup probe needs at least two paths");
  const CylinderMetric metric{system.tau};
  std::vector<SemigroupRow> rows(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [a, b] = pairs[k];
    auto& row = rows[k];
    row.distance = metric.distance(a, b);
    if (row.distance == 0.0) continue;
    std::vector<double> diff(config.n_paths);
    parallel_for(config.n_paths, config.workers, [&](std::size_t q) {
      const BrownianPath path =
          make_path(derive_seed(config.base_seed, kStreamSemigroup, q), config.dt, system.noise_dims());
      const auto ya = lifted_flow(system, x_frozen, a, path, t);
      const auto yb = lifted_flow(system, x_frozen, b, path, t);
      diff[q] = phi(ya.y) - phi(yb.y);
    });
    const double m = mean(diff);
    const double se = standard_error(diff);
    row.ratio = std::abs(m) / row.distance;
    row.se = se / row.distance;
    row.inconclusive = se > std::abs(m);
  }
  return rows;
}

}  // namespace rpavg

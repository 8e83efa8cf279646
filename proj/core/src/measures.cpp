#include "rpavg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "rpavg/error.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/parallel.hpp"
#include "rpavg/stats.hpp"
#include "rpavg/transport.hpp"

namespace rpavg {

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<LiftedState> atoms) {
  EmpiricalMeasure mu;
  const double w = atoms.empty() ? 0.0 : 1.0 / static_cast<double>(atoms.size());
  mu.weights.assign(atoms.size(), w);
  mu.support = std::move(atoms);
  return mu;
}

double CylinderMetric::circle(double s, double t) const {
  const double d = std::fmod(std::abs(s - t), tau);
  return std::min(d, tau - d);
}

double CylinderMetric::distance(const LiftedState& a, const LiftedState& b) const {
  const double c = circle(a.s, b.s);
  return std::sqrt(c * c + (a.y - b.y).squaredNorm());
}

namespace {

struct AtomResult {
  std::vector<LiftedState> values;
  bool converged = false;
};

AtomResult pull_atom(const SlowFastSystem& system, const Vector& x, std::uint64_t seed,
                     const SamplingConfig& cfg, const std::vector<std::int64_t>& r_steps) {
  const BrownianPath path = make_path(seed, cfg.dt, system.noise_dims());
  PullbackConfig pc = cfg.pullback;
  pc.window_periods = 1;
  pc.r_steps = r_steps;
  auto est = pullback_solve(system, x, path, pc);
  return {std::move(est.values), est.converged};
}

void check_exclusions(std::size_t excluded, std::size_t n) {
  if (excluded * 10 > n) {
    std::ostringstream os;
    os << excluded << " of " << n << " pullback samples did not converge (limit 10%)";
    throw SamplingFailure(os.str());
  }
}

}  // namespace

MeasureSample empirical_periodic_measure(const SlowFastSystem& system, const Vector& x_frozen,
                                         double r, std::size_t n_samples,
                                         const SamplingConfig& config) {
  if (n_samples < 1) throw InvalidArgument("empirical_periodic_measure needs at least one sample");
  const std::int64_t P = period_steps(system, config.dt);
  const std::int64_t rp = grid_steps(r, config.dt, "r");
  if (rp < 0 || rp >= P) throw InvalidArgument("section time r must lie in [0, tau)");

  std::vector<AtomResult> res(n_samples);
  std::vector<std::uint64_t> seeds(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) seeds[i] = derive_seed(config.base_seed, kStreamMeasure, i);
  parallel_for(n_samples, config.workers, [&](std::size_t i) {
    res[i] = pull_atom(system, x_frozen, seeds[i], config, {rp});
  });

  MeasureSample out;
  std::vector<LiftedState> atoms;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!res[i].converged) {
      ++out.excluded;
      continue;
    }
    atoms.push_back(std::move(res[i].values[0]));
    out.seeds.push_back(seeds[i]);
  }
  check_exclusions(out.excluded, n_samples);
  out.measure = EmpiricalMeasure::uniform(std::move(atoms));
  return out;
}

std::vector<std::int64_t> section_phases(std::int64_t period, std::size_t n_sections) {
  if (n_sections < 1 || static_cast<std::int64_t>(n_sections) > period)
    throw InvalidArgument("number of sections must lie in [1, tau/dt]");
  std::vector<std::int64_t> ph(n_sections);
  for (std::size_t j = 0; j < n_sections; ++j)
    ph[j] = static_cast<std::int64_t>(j) * period / static_cast<std::int64_t>(n_sections);
  return ph;
}

SectionFamily sample_section_family(const SlowFastSystem& system, const Vector& x_frozen,
                                    std::size_t n_sections, std::size_t n_samples,
                                    const SamplingConfig& config) {
  if (n_samples < 1) throw InvalidArgument("section family needs at least one sample");
  const std::int64_t P = period_steps(system, config.dt);
  SectionFamily fam;
  fam.phases = section_phases(P, n_sections);
  std::vector<AtomResult> res(n_samples);
  parallel_for(n_samples, config.workers, [&](std::size_t i) {
    res[i] = pull_atom(system, x_frozen, derive_seed(config.base_seed, kStreamMeasure, i), config,
                       fam.phases);
  });
  std::vector<std::vector<LiftedState>> atoms(n_sections);
  for (auto& r : res) {
    if (!r.converged) {
      ++fam.excluded;
      continue;
    }
    for (std::size_t j = 0; j < n_sections; ++j) atoms[j].push_back(std::move(r.values[j]));
  }
  check_exclusions(fam.excluded, n_samples);
  for (auto& a : atoms) fam.sections.push_back(EmpiricalMeasure::uniform(std::move(a)));
  fam.common_samples = true;
  return fam;
}

MeasureSample time_averaged_measure(const SlowFastSystem& system, const Vector& x_frozen,
                                    std::size_t n_samples, std::size_t n_sections,
                                    const SamplingConfig& config) {
  if (n_samples < 1) throw InvalidArgument("time-averaged measure needs at least one sample");
  const std::int64_t P = period_steps(system, config.dt);
  const std::size_t R = std::min<std::size_t>({n_sections, 64, static_cast<std::size_t>(P)});
  const auto phases = section_phases(P, R);
  std::vector<AtomResult> res(n_samples);
  std::vector<std::uint64_t> seeds(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i)
    seeds[i] = derive_seed(config.base_seed, kStreamTimeAveraged, i);
  parallel_for(n_samples, config.workers, [&](std::size_t i) {
    res[i] = pull_atom(system, x_frozen, seeds[i], config, {phases[i % R]});
  });
  MeasureSample out;
  std::vector<LiftedState> atoms;
  for (std::size_t i = 0; i < n_samples; ++i) {
    if (!res[i].converged) {
      ++out.excluded;
      continue;
    }
    atoms.push_back(std::move(res[i].values[0]));
    out.seeds.push_back(seeds[i]);
  }
  check_exclusions(out.excluded, n_samples);
  out.measure = EmpiricalMeasure::uniform(std::move(atoms));
  return out;
}

EmpiricalMeasure stratified_subsample(const EmpiricalMeasure& mu, std::size_t n) {
  if (n == 0 || mu.support.empty()) throw InvalidArgument("cannot subsample to zero atoms");
  std::vector<double> cum(mu.weights.size());
  std::partial_sum(mu.weights.begin(), mu.weights.end(), cum.begin());
  const double total = cum.back();
  std::vector<LiftedState> atoms;
  atoms.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = (static_cast<double>(j) + 0.5) / static_cast<double>(n) * total;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    atoms.push_back(mu.support[k]);
  }
  return EmpiricalMeasure::uniform(std::move(atoms));
}

namespace {

// Total order on measures by size, then weights, then atoms.
int compare_measures(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  auto cmp = [](double u, double v) { return u < v ? -1 : (v < u ? 1 : 0); };
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (int c = cmp(a.weights[i], b.weights[i])) return c;
    if (int c = cmp(a.support[i].s, b.support[i].s)) return c;
    const auto& ya = a.support[i].y;
    const auto& yb = b.support[i].y;
    if (ya.size() != yb.size()) return ya.size() < yb.size() ? -1 : 1;
    for (Eigen::Index k = 0; k < ya.size(); ++k)
      if (int c = cmp(ya[k], yb[k])) return c;
  }
  return 0;
}

}  // namespace

BLResult bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     const CylinderMetric& metric, const BLOptions& options) {
  if (mu.support.empty() || nu.support.empty()) throw InvalidArgument("bl_distance of an empty measure");
  BLResult out;
  // Solve in a canonical order so that d(mu, nu) and d(nu, mu) are the same
  // floating-point number.
  const int order = compare_measures(mu, nu);
  if (order == 0) return out;
  const EmpiricalMeasure* a = order < 0 ? &mu : &nu;
  const EmpiricalMeasure* b = order < 0 ? &nu : &mu;
  EmpiricalMeasure sa;
  EmpiricalMeasure sb;
  if (a->size() > options.cap) {
    sa = stratified_subsample(*a, options.cap);
    a = &sa;
    out.subsampled = true;
  }
  if (b->size() > options.cap) {
    sb = stratified_subsample(*b, options.cap);
    b = &sb;
    out.subsampled = true;
  }
  Matrix cost(static_cast<Eigen::Index>(a->size()), static_cast<Eigen::Index>(b->size()));
  for (std::size_t i = 0; i < a->size(); ++i)
    for (std::size_t j = 0; j < b->size(); ++j)
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::min(2.0, metric.distance(a->support[i], b->support[j]));
  out.value = std::clamp(min_cost_transport(a->weights, b->weights, cost), 0.0, 2.0);
  return out;
}

bool CylinderBox::contains(const LiftedState& p) const {
  if (std::isfinite(s_hi) && (p.s < s_lo || p.s > s_hi)) return false;
  for (Eigen::Index i = 0; i < p.y.size(); ++i) {
    if (i < y_lo.size() && p.y[i] < y_lo[i]) return false;
    if (i < y_hi.size() && p.y[i] > y_hi[i]) return false;
  }
  return true;
}

std::vector<KrylovCurve> krylov_bogolyubov_curve(const SlowFastSystem& system,
                                                 const Vector& x_frozen,
                                                 const std::vector<CylinderBox>& boxes,
                                                 int m_max, const KrylovConfig& config) {
  if (m_max < 2) throw InvalidArgument("krylov_bogolyubov_curve needs m_max >= 2");
  if (boxes.empty()) throw InvalidArgument("krylov_bogolyubov_curve needs at least one box");
  const double dt = config.sampling.dt;
  const std::int64_t P = period_steps(system, dt);
  const std::int64_t r = wrap_phase(config.section_phase, P);
  const std::uint64_t base = config.sampling.base_seed;

  SamplingConfig start_cfg = config.sampling;
  start_cfg.base_seed = derive_seed(base, kStreamKrylovStart, 0);
  const auto starts =
      time_averaged_measure(system, x_frozen, config.n_start, config.n_sections, start_cfg).measure;
  SamplingConfig mu_cfg = config.sampling;
  mu_cfg.base_seed = derive_seed(base, kStreamKrylovMeasure, 0);
  const auto section =
      empirical_periodic_measure(system, x_frozen, static_cast<double>(r) * dt, config.n_measure, mu_cfg)
          .measure;

  const std::size_t nb = boxes.size();
  const std::size_t ns = starts.size();
  const auto M = static_cast<std::size_t>(m_max);
  // Per start, per box, per m: mean and variance of the per-path Cesaro average.
  std::vector<std::vector<double>> cmean(ns, std::vector<double>(nb * M));
  std::vector<std::vector<double>> cvar(ns, std::vector<double>(nb * M));

  parallel_for(ns, config.sampling.workers, [&](std::size_t j) {
    const LiftedState& y0 = starts.support[j];
    const std::int64_t first = wrap_phase(r - y0.phase, P);
    std::vector<double> sum(nb * M, 0.0);
    std::vector<double> sumsq(nb * M, 0.0);
    std::vector<int> hits(nb);
    for (std::size_t q = 0; q < config.n_inner; ++q) {
      const BrownianPath path = make_path(
          derive_seed(base, kStreamKrylovInner, j * config.n_inner + q), dt, system.noise_dims());
      FastStepper st(system, path);
      st.set_x(x_frozen);
      Vector y = y0.y;
      std::fill(hits.begin(), hits.end(), 0);
      std::int64_t phase = y0.phase;
      std::int64_t inc = 0;
      auto advance = [&](std::int64_t n) {
        st.run(y, phase, inc, n, [](std::int64_t, std::int64_t, const Vector&) {});
        phase = wrap_phase(phase + n, P);
        inc += n;
      };
      advance(first);
      for (std::size_t k = 0; k < M; ++k) {
        if (k > 0) advance(P);
        const LiftedState here = make_lifted(phase, dt, y);
        for (std::size_t b = 0; b < nb; ++b) {
          hits[b] += boxes[b].contains(here) ? 1 : 0;
          const double c = static_cast<double>(hits[b]) / static_cast<double>(k + 1);
          sum[b * M + k] += c;
          sumsq[b * M + k] += c * c;
        }
      }
    }
    const double n = static_cast<double>(config.n_inner);
    for (std::size_t i = 0; i < nb * M; ++i) {
      const double m = sum[i] / n;
      cmean[j][i] = m;
      cvar[j][i] = n > 1 ? std::max(0.0, (sumsq[i] - n * m * m) / (n - 1.0)) / n : 0.0;
    }
  });

  std::vector<KrylovCurve> curves;
  for (std::size_t b = 0; b < nb; ++b) {
    KrylovCurve c;
    c.box = boxes[b];
    std::size_t inside = 0;
    for (const auto& p : section.support) inside += boxes[b].contains(p) ? 1 : 0;
    const double nm = static_cast<double>(section.size());
    c.mu_r = static_cast<double>(inside) / nm;
    c.mu_r_se = std::sqrt(c.mu_r * (1.0 - c.mu_r) / nm);
    for (std::size_t k = 0; k < M; ++k) {
      double d = 0.0;
      double v = 0.0;
      for (std::size_t j = 0; j < ns; ++j) {
        d += std::abs(cmean[j][b * M + k] - c.mu_r);
        v += cvar[j][b * M + k];
      }
      d /= static_cast<double>(ns);
      v /= static_cast<double>(ns);
      const double se = std::sqrt(v + c.mu_r_se * c.mu_r_se);
      c.value.push_back(d);
      c.se.push_back(se);
      c.inconclusive.push_back(d < se);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

std::vector<LipschitzRow> measure_lipschitz_probe(const SlowFastSystem& system,
                                                  const std::vector<Vector>& x_list,
                                                  const LipschitzProbeConfig& config) {
  if (x_list.size() < 2) throw InvalidArgument("measure_lipschitz_probe needs at least two points");
  std::vector<EmpiricalMeasure> mus;
  for (const auto& x : x_list)
    mus.push_back(
        time_averaged_measure(system, x, config.n_samples, config.n_sections, config.sampling).measure);
  std::vector<LipschitzRow> rows;
  for (std::size_t i = 0; i < x_list.size(); ++i)
    for (std::size_t j = i + 1; j < x_list.size(); ++j) rows.push_back({i, j});
  const CylinderMetric metric{system.tau};
  parallel_for(rows.size(), config.sampling.workers, [&](std::size_t k) {
    auto& row = rows[k];
    row.x_distance = (x_list[row.i] - x_list[row.j]).norm();
    const auto bl = bl_distance(mus[row.i], mus[row.j], metric, config.bl);
    row.d_bl = bl.value;
    row.subsampled = bl.subsampled;
    row.ratio = row.x_distance > 0.0 ? row.d_bl / row.x_distance : 0.0;
  });
  return rows;
}

PoincareReport poincare_section_check(const EmpiricalMeasure& measure, const SlowFastSystem& system,
                                      const Vector& x_frozen, double dt,
                                      const PoincareConfig& config) {
  if (measure.support.empty()) throw InvalidArgument("poincare_section_check of an empty measure");
  const std::int64_t P = period_steps(system, dt);
  const Eigen::Index N = measure.support.front().y.size();
  PoincareReport rep;
  if (config.hull == HullKind::kInflatedBox) {
    rep.hull_lo = Vector::Constant(N, std::numeric_limits<double>::infinity());
    rep.hull_hi = Vector::Constant(N, -std::numeric_limits<double>::infinity());
    for (const auto& p : measure.support) {
      rep.hull_lo = rep.hull_lo.cwiseMin(p.y);
      rep.hull_hi = rep.hull_hi.cwiseMax(p.y);
    }
    rep.hull_lo.array() -= config.bandwidth;
    rep.hull_hi.array() += config.bandwidth;
  } else {
    Vector m = Vector::Zero(N);
    for (std::size_t i = 0; i < measure.size(); ++i) m += measure.weights[i] * measure.support[i].y;
    Vector v = Vector::Zero(N);
    for (std::size_t i = 0; i < measure.size(); ++i)
      v += measure.weights[i] * (measure.support[i].y - m).cwiseAbs2();
    const Vector sd = v.cwiseSqrt();
    rep.hull_lo = m - config.k_sigma * sd;
    rep.hull_hi = m + config.k_sigma * sd;
  }
  const std::size_t reps = std::max<std::size_t>(1, config.repeats);
  const std::size_t n = measure.size() * reps;
  std::vector<char> inside(n, 0);
  parallel_for(n, config.workers, [&](std::size_t k) {
    const LiftedState& a = measure.support[k / reps];
    const BrownianPath path =
        make_path(derive_seed(config.base_seed, kStreamPoincare, k), dt, system.noise_dims());
    const LiftedState b = lifted_flow(system, x_frozen, a, path, static_cast<double>(P) * dt);
    inside[k] = ((b.y - rep.hull_lo).minCoeff() >= 0.0 && (rep.hull_hi - b.y).minCoeff() >= 0.0) ? 1 : 0;
  });
  double hits = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (inside[k]) hits += measure.weights[k / reps] / static_cast<double>(reps);
  rep.trials = n;
  const bool all = std::all_of(inside.begin(), inside.end(), [](char c) { return c != 0; });
  rep.fraction = all ? 1.0 : std::clamp(hits, 0.0, 1.0);
  rep.se = std::sqrt(rep.fraction * (1.0 - rep.fraction) / static_cast<double>(n));
  return rep;
}

}  // namespace rpavg

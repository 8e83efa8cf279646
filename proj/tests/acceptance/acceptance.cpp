// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Budgets and tolerances are fixed here.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lp_oracle.hpp"
#include "rpavg/averaging.hpp"
#include "rpavg/catalog.hpp"
#include "rpavg/diagnostics.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/measures.hpp"
#include "rpavg/oracles.hpp"
#include "rpavg/pullback.hpp"
#include "rpavg/stats.hpp"

using namespace rpavg;

namespace {

constexpr unsigned kWorkers = 0;  // all cores; results do not depend on it

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector vec1(double v) { return Vector::Constant(1, v); }

SamplingConfig sampling(double dt, std::uint64_t seed, double tol) {
  SamplingConfig c;
  c.dt = dt;
  c.base_seed = seed;
  c.pullback.tol = tol;
  c.workers = kWorkers;
  return c;
}

AveragedField toy_fbar(const ToyParams& p) {
  return [p](const Vector& x) { return vec1(toy_averaged_drift(x[0], p)); };
}

// 1. Pullback against the OU oracle.
Outcome ou_pullback_oracle() {
  const double dt = 1e-3;
  const double tol = 1e-4;
  const int max_k = 15;
  const double max_err = 5e-3;
  const OuPeriodicParams p;
  const auto sys = ou_periodic(p);
  const auto alpha = [p](double t) { return p.alpha(t); };
  const auto beta = [p](double t) { return p.beta(t); };
  bool ok = true;
  int worst_k = 0;
  double worst_err = 0.0;
  for (std::uint64_t seed : {11, 12, 13}) {
    const auto path = make_path(seed, dt, 1);
    PullbackConfig cfg;
    cfg.tol = tol;
    const auto est = pullback_solve(sys, Vector::Zero(1), path, cfg);
    ok = ok && est.converged && est.k_used <= max_k;
    worst_k = std::max(worst_k, est.k_used);
    for (std::size_t j = 0; j < est.values.size(); ++j) {
      const auto o = ou_random_periodic_oracle(alpha, beta, p.sigma, path, est.r_grid[j], 20);
      worst_err = std::max(worst_err, std::abs(est.values[j].y[0] - o.value));
    }
  }
  ok = ok && worst_err <= max_err;
  return {ok, fmt("3 seeds, max k_used=%d (<=%d), sup error=%.3e (<=%.1e)", worst_k, max_k, worst_err, max_err)};
}

// 2. S(r + tau, w) against S(r, theta_tau w) on the r-grid.
Outcome random_periodicity() {
  const double dt = 1e-3;
  const double tol = 1e-4;
  const double bound = 2.0 * (tol + 5.0 * dt);
  const auto sys = ou_periodic();
  double worst = 0.0;
  for (std::uint64_t seed : {21, 22, 23}) {
    PullbackConfig cfg;
    cfg.tol = tol;
    const auto path = make_path(seed, dt, 1);
    const auto est = pullback_solve(sys, Vector::Zero(1), path, cfg);
    const auto rep = verify_random_periodicity(est, sys, path, tol);
    worst = std::max(worst, rep.periodicity_residual);
  }
  return {worst <= bound, fmt("3 seeds, max residual=%.3e (<=%.3e)", worst, bound)};
}

bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

// 3. Phi(t + s, w, y) = Phi(t, theta_s w, Phi(s, w, y)) bit for bit.
Outcome cocycle_bit_exact() {
  const double dt = 1e-3;
  const auto sys = toy_turbulence();
  const auto path = make_path(31, dt, 1);
  const Vector x = vec1(0.3);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> steps(0, 3000);
  std::uniform_int_distribution<int> phase(0, 999);
  std::normal_distribution<double> normal;
  int exact = 0;
  const int trials = 100;
  for (int k = 0; k < trials; ++k) {
    const int s = steps(rng);
    const int t = steps(rng);
    const auto y0 = make_lifted(phase(rng), dt, vec1(normal(rng)));
    const auto direct = lifted_flow(sys, x, y0, path, (s + t) * dt);
    const auto mid = lifted_flow(sys, x, y0, path, s * dt);
    const auto composed = lifted_flow(sys, x, mid, path.shifted(s), t * dt);
    exact += direct.phase == composed.phase && same_bits(direct.y, composed.y) ? 1 : 0;
  }
  return {exact == trials, fmt("%d/%d triples byte-identical", exact, trials)};
}

// 4. d_BL on two-atom instances and metric axioms on random small measures.
Outcome bl_exactness() {
  const double tol = 1e-9;
  const CylinderMetric metric{1.0};
  double worst_pair = 0.0;
  for (double d : {0.5, 1.0, 5.0})
    for (std::int64_t ph : {0, 250, 730}) {
      const double dt = 1e-3;
      const Vector a = (Vector(2) << 0.3, -1.0).finished();
      for (const Vector& dir : {Vector((Vector(2) << 1.0, 0.0).finished()),
                                Vector((Vector(2) << 0.6, -0.8).finished())}) {
        const auto mu = EmpiricalMeasure::uniform({make_lifted(ph, dt, a)});
        const auto nu = EmpiricalMeasure::uniform({make_lifted(ph, dt, a + d * dir)});
        worst_pair = std::max(worst_pair, std::abs(bl_distance(mu, nu, metric).value - std::min(2.0, d)));
        // Two well separated atoms translated together.
        const Vector b = a + Vector::Constant(2, 20.0);
        const auto mu2 = EmpiricalMeasure::uniform({make_lifted(ph, dt, a), make_lifted(ph, dt, b)});
        const auto nu2 =
            EmpiricalMeasure::uniform({make_lifted(ph, dt, a + d * dir), make_lifted(ph, dt, b + d * dir)});
        worst_pair = std::max(worst_pair, std::abs(bl_distance(mu2, nu2, metric).value - std::min(2.0, d)));
      }
    }

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_int_distribution<int> phase(0, 99);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  auto draw = [&] {
    EmpiricalMeasure m;
    const int n = count(rng);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      m.support.push_back(make_lifted(phase(rng), 1e-2, vec1(1.5 * normal(rng))));
      m.weights.push_back(weight(rng));
      total += m.weights.back();
    }
    for (double& w : m.weights) w /= total;
    return m;
  };
  double worst_axiom = 0.0;
  double worst_lp = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto mu = draw();
    const auto nu = draw();
    const auto rho = draw();
    const double d_mn = bl_distance(mu, nu, metric).value;
    const double d_nm = bl_distance(nu, mu, metric).value;
    const double d_mr = bl_distance(mu, rho, metric).value;
    const double d_rn = bl_distance(rho, nu, metric).value;
    worst_axiom = std::max({worst_axiom, std::abs(d_mn - d_nm), -d_mn, bl_distance(mu, mu, metric).value,
                            d_mn - d_mr - d_rn});
    worst_lp = std::max(worst_lp, std::abs(d_mn - lp::bl_distance_lp(mu, nu, metric)));
  }
  const bool ok = worst_pair <= tol && worst_axiom <= tol && worst_lp <= tol;
  return {ok, fmt("two-atom err=%.1e, axiom violation=%.1e, LP gap=%.1e (<=%.0e)", worst_pair,
                  std::max(worst_axiom, 0.0), worst_lp, tol)};
}

// 5. Toy fast-marginal variance at x = 0.
Outcome toy_variance() {
  const std::size_t n = 2000;
  const auto sys = toy_turbulence();
  const auto sample = empirical_periodic_measure(sys, vec1(0.0), 0.0, n, sampling(1e-3, 51, 1e-4));
  std::vector<double> y;
  for (const auto& p : sample.measure.support) y.push_back(p.y[0]);
  const double v = sample_variance(y);
  const double se = variance_standard_error(y);
  const double target = 0.5;
  return {std::abs(v - target) <= 3.0 * se,
          fmt("var=%.4f, target %.1f, |diff|=%.4f (<=3 SE=%.4f), n=%zu, excluded=%zu", v, target,
              std::abs(v - target), 3.0 * se, y.size(), sample.excluded)};
}

// 6. Ergodic and measure routes against each other and the quadrature drift.
Outcome drift_routes() {
  const ToyParams p;
  const auto sys = toy_turbulence(p);
  const double dt = 1e-3;
  bool ok = true;
  double worst_z = 0.0;
  double alt_z = std::numeric_limits<double>::infinity();
  for (double x : {-1.0, 0.0, 1.0}) {
    const auto path = make_path(derive_seed(61, kStreamErgodic, 0), dt, 1);
    const auto erg = averaged_drift_ergodic(sys, vec1(x), 20000.0, 20.0, path);
    const auto fam = sample_section_family(sys, vec1(x), 64, 2000, sampling(dt, 62, 1e-4));
    const auto mea = averaged_drift_measure(sys, vec1(x), fam);
    const double ref = toy_averaged_drift(x, p);
    const double e = erg.value[0];
    const double m = mea.value[0];
    const double se_e = erg.se[0];
    const double se_m = mea.se[0];
    const double z_em = std::abs(e - m) / std::hypot(se_e, se_m);
    const double z_e = std::abs(e - ref) / se_e;
    const double z_m = std::abs(m - ref) / se_m;
    ok = ok && z_em <= 3.0 && z_e <= 3.0 && z_m <= 3.0;
    worst_z = std::max({worst_z, z_em, z_e, z_m});
    // The alternative form would move the reference by beta^2 (alternative - quadrature).
    const double alt = ref + p.beta * p.beta * (toy_v2_integral_alt_form(x, p) - toy_v2_integral(x, p));
    alt_z = std::min(alt_z, std::abs(e - alt) / se_e);
  }
  return {ok, fmt("x in {-1,0,1}: max z=%.2f (<=3); alt form 2/(g^2+4pi^2) rejected at >=%.1f SE", worst_z, alt_z)};
}

// 7. Block counts of the partition.
Outcome partition_values() {
  const int a = hasminskii_partition(0.1, 1.0).n;
  const int b = hasminskii_partition(0.01, 1.0).n;
  return {a == 9 && b == 69, fmt("n(0.1)=%d (9), n(0.01)=%d (69)", a, b)};
}

// 8. Doubling the block count shrinks E sup |Y - Yhat|^2.
Outcome auxiliary_scaling() {
  StudyConfig c;
  c.dt = 1e-3;
  c.base_seed = 2024;
  c.pullback.tol = 1e-6;
  c.workers = kWorkers;
  const auto rep = auxiliary_gap_study(toy_turbulence(), vec1(1.0), 0.05, 1.0, {16, 32}, 200, c);
  const double d = rep.paired_diff[0];
  const double se = rep.paired_diff_se[0];
  return {d > 2.0 * se, fmt("n=16: %.3e, n=32: %.3e, paired diff=%.3e (>2 SE=%.3e), n_mc=200", rep.mean[0],
                            rep.mean[1], d, 2.0 * se)};
}

// 9. Mean sup-errors decrease with eps.
Outcome averaging_limit() {
  const ToyParams p;
  StudyConfig c;
  c.dt = 1e-3;
  c.base_seed = 2024;
  c.pullback.tol = 1e-6;
  c.n_sections = 64;
  c.workers = kWorkers;
  const auto st = averaging_error_study(toy_turbulence(p), {vec1(-1.0), vec1(0.0), vec1(1.0)}, {0.1, 0.05, 0.02},
                                        1.0, 50, toy_fbar(p), c);
  std::string d = "means";
  for (const auto& r : st.reports) d += fmt(" %.4f", r.mean);
  for (std::size_t k = 0; k < st.gap.size(); ++k) d += fmt("; gap%zu=%.4f (paired SE %.4f)", k + 1, st.gap[k], st.gap_se[k]);
  return {st.strictly_decreasing, d};
}

// 10. Coupling rate, Hormander rank and bracket antisymmetry.
Outcome diagnostics() {
  OuPeriodicParams op;
  op.a0 = 1.0;
  op.a1 = 0.0;
  op.b1 = 0.0;
  const auto rate = coupling_rate(ou_periodic(op), Vector::Zero(1), vec1(1.0), vec1(-1.0), squared_norm_lyapunov(),
                                  make_path(101, 1e-3, 1), 10.0);
  const bool rate_ok = rate.beta_hat >= -1.15 && rate.beta_hat <= -0.85;

  const auto e0 = [](double, const Vector&) { return Vector((Vector(2) << 1.0, 0.0).finished()); };
  const auto e1 = [](double, const Vector&) { return Vector((Vector(2) << 0.0, 1.0).finished()); };
  const auto g = [](double, const Vector& y) { return Vector((Vector(2) << 0.0, y[0]).finished()); };
  const auto r_id = hormander_rank({e0, e1}, 0.0, Vector::Zero(2), 3);
  const auto r_br = hormander_rank({e0, g}, 0.0, Vector::Zero(2), 3);
  const bool rank_ok = r_id.rank == 2 && r_id.level == 0 && r_br.rank == 2 && r_br.level == 1;

  std::mt19937_64 rng(10);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto poly = [&] {
    Eigen::Matrix<double, 2, 10> c;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 10; ++j) c(i, j) = normal(rng);
    return TimeField([c](double, const Vector& y) -> Vector {
      const double a = y[0], b = y[1];
      Eigen::Matrix<double, 10, 1> m;
      m << 1, a, b, a * a, a * b, b * b, a * a * a, a * a * b, a * b * b, b * b * b;
      return c * m;
    });
  };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto F = poly();
    const auto G = poly();
    const Vector y = (Vector(2) << u(rng), u(rng)).finished();
    worst = std::max(worst, (lie_bracket(F, G, 0.0, y) + lie_bracket(G, F, 0.0, y)).norm());
  }
  const bool anti_ok = worst <= 2e-8;
  return {rate_ok && rank_ok && anti_ok,
          fmt("beta_hat=%.3f in [-1.15,-0.85]; ranks (%d,%d) and (%d,%d); antisymmetry %.1e (<=2e-8)",
              rate.beta_hat, r_id.rank, r_id.level, r_br.rank, r_br.level, worst)};
}

// 11. Cesaro curve for the median half-space box.
Outcome krylov_bogolyubov() {
  const double dt = 1e-3;
  const auto sys = ou_periodic();
  const auto sample = empirical_periodic_measure(sys, Vector::Zero(1), 0.0, 1000, sampling(dt, 111, 1e-4));
  std::vector<double> y;
  for (const auto& p : sample.measure.support) y.push_back(p.y[0]);
  std::nth_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(y.size() / 2), y.end());
  const double median = y[y.size() / 2];
  const double inf = std::numeric_limits<double>::infinity();
  KrylovConfig kc;
  kc.sampling = sampling(dt, 112, 1e-4);
  const int m = 32;
  const auto cv = krylov_bogolyubov_curve(sys, Vector::Zero(1), {CylinderBox{vec1(-inf), vec1(median)}}, m, kc)[0];
  const double v = cv.value.back();
  const double se = cv.se.back();
  return {v <= 3.0 * se, fmt("m=%d: |Cesaro - mu_r(B)|=%.4f (<=3 SE=%.4f), mu_r(B)=%.3f", m, v, 3.0 * se, cv.mu_r)};
}

// 12. d_BL ratios across x in {0, 0.1, 0.2}.
Outcome lipschitz_probe() {
  LipschitzProbeConfig lc;
  lc.sampling = sampling(1e-3, 121, 1e-6);
  const auto rows = measure_lipschitz_probe(toy_turbulence(), {vec1(0.0), vec1(0.1), vec1(0.2)}, lc);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  bool finite = true;
  std::string d = "ratios";
  for (const auto& r : rows) {
    if (r.x_distance == 0.0) continue;
    finite = finite && std::isfinite(r.ratio) && r.ratio > 0.0;
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    d += fmt(" (%zu,%zu)=%.4f", r.i, r.j, r.ratio);
  }
  const double spread = hi / lo;
  return {finite && spread <= 3.0, d + fmt("; max/min=%.3f (<=3)", spread)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "ou_pullback_oracle", ou_pullback_oracle},
      {2, "random_periodicity", random_periodicity},
      {3, "cocycle_bit_exact", cocycle_bit_exact},
      {4, "bl_distance_exact", bl_exactness},
      {5, "toy_fast_variance", toy_variance},
      {6, "drift_two_routes", drift_routes},
      {7, "partition_values", partition_values},
      {8, "auxiliary_scaling", auxiliary_scaling},
      {9, "averaging_limit", averaging_limit},
      {10, "diagnostics", diagnostics},
      {11, "krylov_bogolyubov", krylov_bogolyubov},
      {12, "measure_lipschitz", lipschitz_probe},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

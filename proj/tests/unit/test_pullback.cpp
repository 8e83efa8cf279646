#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rpavg/catalog.hpp"
#include "rpavg/error.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/oracles.hpp"
#include "rpavg/pullback.hpp"
#include "rpavg/stats.hpp"

using namespace rpavg;

namespace {

const Vector kX0 = Vector::Zero(1);

SlowFastSystem constant_ou(double a) {
  OuPeriodicParams p;
  p.a0 = a;
  p.a1 = 0.0;
  p.b1 = 0.0;
  return ou_periodic(p);
}

SlowFastSystem forced_contraction() {
  PolynomialParams p;
  p.drift_y = {0.0, -1.0};
  p.forcing_cos = 1.0;
  p.diffusion_y = {0.0};
  return polynomial_system(p);
}

PullbackConfig config(double tol, int k_max = 40) {
  PullbackConfig c;
  c.tol = tol;
  c.k_max = k_max;
  return c;
}

}  // namespace

TEST(Pullback, MatchesOuOracle) {
  const double dt = 1e-3;
  const double tol = 1e-4;
  const OuPeriodicParams p;
  const auto sys = ou_periodic(p);
  const auto path = make_path(11, dt, 1);
  const auto est = pullback_solve(sys, kX0, path, config(tol));
  ASSERT_TRUE(est.converged);
  EXPECT_LE(est.k_used, 15);
  EXPECT_LE(est.sup_diffs.back(), tol);
  ASSERT_EQ(est.values.size(), 1001u);
  const auto alpha = [p](double t) { return p.alpha(t); };
  const auto beta = [p](double t) { return p.beta(t); };
  double err = 0.0;
  double trunc = 0.0;
  for (std::size_t j = 0; j < est.values.size(); j += 5) {
    const auto o = ou_random_periodic_oracle(alpha, beta, p.sigma, path, est.r_grid[j], 20);
    err = std::max(err, std::abs(o.value - est.values[j].y[0]));
    trunc = std::max(trunc, o.truncation_bound);
  }
  EXPECT_LE(err, std::max(5.0 * dt, tol) + trunc);
}

TEST(Pullback, DeterministicContractionMatchesForwardIntegration) {
  const double dt = 1e-3;
  const auto sys = forced_contraction();
  const auto path = make_path(1, dt, 1);
  const auto est = pullback_solve(sys, kX0, path, config(1e-10));
  ASSERT_TRUE(est.converged);
  const auto fwd = simulate_fast(sys, kX0, Vector::Zero(1), path, 0.0, 30.0);
  const std::size_t off = 29000;
  double err = 0.0;
  for (std::size_t j = 0; j < est.values.size(); ++j)
    err = std::max(err, std::abs(est.values[j].y[0] - fwd.states[off + j][0]));
  EXPECT_LE(err, 10.0 * dt);
  // Geometric decay of successive differences from the first iterate on.
  for (std::size_t k = 1; k < est.sup_diffs.size(); ++k) EXPECT_LT(est.sup_diffs[k], est.sup_diffs[k - 1]);
}

TEST(Pullback, RateMatchesOuContractionOnAverage) {
  const double dt = 1e-2;
  for (double a : {1.0, 2.0}) {
    const auto sys = constant_ou(a);
    std::vector<double> rates;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const auto est = pullback_solve(sys, kX0, make_path(seed, dt, 1), config(1e-13, 60));
      ASSERT_TRUE(std::isfinite(est.rate_estimate));
      rates.push_back(est.rate_estimate);
    }
    const double expected = -a * 1.0;
    EXPECT_NEAR(mean(rates), expected, 0.2 * a) << "a = " << a;
  }
}

TEST(Pullback, LimitIsAnchorIndependent) {
  const double tol = 1e-6;
  const auto sys = ou_periodic();
  const auto path = make_path(21, 1e-3, 1);
  auto c0 = config(tol);
  auto c1 = config(tol);
  c1.anchor = make_lifted(0, 1e-3, Vector::Constant(1, 1.0));
  const auto a = pullback_solve(sys, kX0, path, c0);
  const auto b = pullback_solve(sys, kX0, path, c1);
  ASSERT_TRUE(a.converged && b.converged);
  double d = 0.0;
  for (std::size_t j = 0; j < a.values.size(); ++j) d = std::max(d, (a.values[j].y - b.values[j].y).norm());
  EXPECT_LE(d, 2.0 * tol);
}

TEST(Pullback, PresentValueDependsOnlyOnThePast) {
  const double dt = 1e-3;
  const auto sys = ou_periodic();
  auto c = config(1e-8);
  c.r_steps = {0};
  const auto base = make_path(40, dt, 1);
  const auto new_past = base.with_past(41);
  const auto new_future = make_path(42, dt, 1).with_past(40);
  const double s0 = pullback_solve(sys, kX0, base, c).values[0].y[0];
  EXPECT_NE(pullback_solve(sys, kX0, new_past, c).values[0].y[0], s0);
  EXPECT_EQ(pullback_solve(sys, kX0, new_future, c).values[0].y[0], s0);
}

TEST(Pullback, KMaxWithoutConvergenceIsFlaggedNotThrown) {
  const auto sys = ou_periodic();
  const auto path = make_path(3, 1e-2, 1);
  PeriodicSolutionEstimate est;
  ASSERT_NO_THROW(est = pullback_solve(sys, kX0, path, config(1e-300, 3)));
  EXPECT_FALSE(est.converged);
  EXPECT_EQ(est.k_used, 3);
  EXPECT_EQ(est.sup_diffs.size(), 3u);  // iterates 0..3
}

TEST(Pullback, InvalidArguments) {
  const auto sys = ou_periodic();
  const auto path = make_path(3, 1e-2, 1);
  EXPECT_THROW(pullback_solve(sys, kX0, path, config(1e-6, 1)), InvalidArgument);
  EXPECT_THROW(pullback_solve(sys, kX0, path, config(0.0)), InvalidArgument);
  EXPECT_THROW(pullback_solve(sys, kX0, make_path(3, 0.3, 1), config(1e-6)), GridMisalignment);
}

TEST(Pullback, RateOfSyntheticSequence) {
  std::vector<double> d;
  for (int k = 0; k < 10; ++k) d.push_back(std::exp(-1.5 * k));
  EXPECT_NEAR(pullback_rate(d), -1.5, 1e-12);
  EXPECT_TRUE(std::isnan(pullback_rate({1.0})));
}

TEST(RandomPeriodicity, OuResidualsWithinBound) {
  const double dt = 1e-3;
  const double tol = 1e-4;
  const auto sys = ou_periodic();
  const auto path = make_path(5, dt, 1);
  const auto est = pullback_solve(sys, kX0, path, config(tol));
  ASSERT_TRUE(est.converged);
  const auto rep = verify_random_periodicity(est, sys, path, 5.0 * dt);
  EXPECT_LE(rep.periodicity_residual, 2.0 * (tol + 5.0 * dt));
  EXPECT_LE(rep.cocycle_residual, 2.0 * (tol + 5.0 * dt));
  // The flow from a point of the estimate reproduces the estimate exactly.
  EXPECT_EQ(rep.cocycle_residual, 0.0);
  EXPECT_GT(rep.cocycle_pairs, 0u);
  EXPECT_TRUE(rep.periodicity_ok);
}

TEST(RandomPeriodicity, DeterministicOrbit) {
  const double dt = 1e-3;
  const auto sys = forced_contraction();
  const auto path = make_path(5, dt, 1);
  const auto est = pullback_solve(sys, kX0, path, config(1e-9));
  const auto rep = verify_random_periodicity(est, sys, path, 10.0 * dt);
  EXPECT_LE(rep.periodicity_residual, 10.0 * dt);
}

TEST(StabilityProbe, ZeroPerturbationGivesZeroDifferences) {
  const auto sys = ou_periodic();
  const auto path = make_path(6, 1e-3, 1);
  const auto est = pullback_solve(sys, kX0, path, config(1e-8));
  const auto rows = stability_probe(sys, kX0, est, {Vector::Zero(1)}, path, 4);
  ASSERT_EQ(rows.size(), 1u);
  for (double d : rows[0].diffs) EXPECT_LE(d, 2e-8);
}

TEST(StabilityProbe, OuDecaysAtRateTwo) {
  const auto sys = constant_ou(2.0);
  const auto path = make_path(6, 1e-3, 1);
  const auto est = pullback_solve(sys, kX0, path, config(1e-12));
  const auto rows = stability_probe(sys, kX0, est, {Vector::Constant(1, 1.0)}, path, 6);
  EXPECT_LE(rows[0].slope_per_time, -1.5);
}

TEST(StabilityProbe, ToyFastSubsystemContracts) {
  const auto sys = toy_turbulence();
  const auto path = make_path(6, 1e-3, 1);
  const auto est = pullback_solve(sys, kX0, path, config(1e-10));
  const auto rows = stability_probe(sys, kX0, est, {Vector::Constant(1, 1.0), Vector::Constant(1, -2.0)}, path, 6);
  for (const auto& r : rows) EXPECT_LT(r.slope_per_time, 0.0);
}

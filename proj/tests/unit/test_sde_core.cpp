#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "rpavg/catalog.hpp"
#include "rpavg/error.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/oracles.hpp"

using namespace rpavg;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

VectorField constant_field(Eigen::Index rows, Eigen::Index cols, double v) {
  return make_field(0u, rows, cols, [v](double, const Vector&, const Vector&, Matrix& out) { out.setConstant(v); });
}

VectorField linear_drift(double a) {
  return make_field(kArgY, 1, 1, [a](double, const Vector&, const Vector& y, Matrix& out) { out(0, 0) = -a * y[0]; });
}

SlowFastSystem scalar_system(VectorField b, VectorField sigma, VectorField F) {
  SlowFastSystem s;
  s.name = "test";
  s.d = 1;
  s.N = 1;
  s.tau = 1.0;
  s.epsilon = 0.1;
  s.b = std::move(b);
  s.sigma = std::move(sigma);
  s.F = std::move(F);
  return s;
}

bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

const Vector kX0 = Vector::Zero(1);

}  // namespace

TEST(EmStep, ZeroCoefficientsLeaveStateUnchanged) {
  const Vector y = (Vector(2) << 1.5, -2.0).finished();
  const Vector dw = (Vector(2) << 0.3, 0.1).finished();
  const Vector out = em_step(y, 0.0, constant_field(2, 1, 0.0), constant_field(2, 2, 0.0), dw, 0.1);
  EXPECT_TRUE(same_bits(out, y));
}

TEST(EmStep, ExplicitEulerDrift) {
  const Vector out = em_step(Vector::Constant(1, 1.0), 0.0, linear_drift(1.0), constant_field(1, 1, 0.0),
                             Vector::Zero(1), 0.1);
  EXPECT_DOUBLE_EQ(out[0], 0.9);
}

TEST(EmStep, AdditiveNoise) {
  const Vector out = em_step(Vector::Zero(1), 0.0, linear_drift(1.0), constant_field(1, 1, 1.0),
                             Vector::Constant(1, 0.05), 0.01);
  EXPECT_DOUBLE_EQ(out[0], 0.05);
}

TEST(EmStep, NonFiniteStateThrowsWithTimeAndState) {
  const auto blow = make_field(kArgY, 1, 1, [](double, const Vector&, const Vector& y, Matrix& out) {
    out(0, 0) = y[0] * 1e300;
  });
  try {
    em_step(Vector::Constant(1, 1e10), 2.5, blow, constant_field(1, 1, 0.0), Vector::Zero(1), 1.0);
    FAIL() << "expected NumericalBlowup";
  } catch (const NumericalBlowup& e) {
    EXPECT_EQ(e.time(), 3.5);  // time of the offending new state
    EXPECT_EQ(e.state().size(), 1);
  }
}

TEST(SimulateFast, DeterministicDecay) {
  const auto sys = scalar_system(linear_drift(1.0), constant_field(1, 1, 0.0), constant_field(1, 1, 0.0));
  const auto path = make_path(1, 1e-3, 1);
  const auto tr = simulate_fast(sys, kX0, Vector::Constant(1, 1.0), path, 0.0, 1.0);
  ASSERT_EQ(tr.states.size(), 1001u);
  EXPECT_NEAR(tr.states.back()[0], std::exp(-1.0), 2e-3);
  EXPECT_EQ(tr.time(1000), 1.0);
}

TEST(SimulateFast, ExplosiveDriftRaisesBlowup) {
  const auto sys = scalar_system(
      make_field(kArgY, 1, 1, [](double, const Vector&, const Vector& y, Matrix& out) { out(0, 0) = y[0] * y[0]; }),
      constant_field(1, 1, 0.0), constant_field(1, 1, 0.0));
  const auto path = make_path(1, 1e-2, 1);
  EXPECT_THROW(simulate_fast(sys, kX0, Vector::Constant(1, 10.0), path, 0.0, 10.0), NumericalBlowup);
}

TEST(SimulateFast, SameCallIsBitIdentical) {
  const auto sys = ou_periodic();
  const auto path = make_path(77, 1e-3, 1);
  const auto a = simulate_fast(sys, kX0, Vector::Zero(1), path, -3.0, 2.0);
  const auto b = simulate_fast(sys, kX0, Vector::Zero(1), path, -3.0, 2.0);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t j = 0; j < a.states.size(); ++j) ASSERT_TRUE(same_bits(a.states[j], b.states[j]));
}

namespace {

// sup over t in [0, 1] (every 10th step) of |EM - oracle| for the forced OU example.
double ou_oracle_sup_error(std::uint64_t seed, double dt) {
  const OuPeriodicParams p;
  const auto sys = ou_periodic(p);
  const auto path = make_path(seed, dt, 1);
  const int K = 20;
  const auto tr = simulate_fast(sys, kX0, Vector::Zero(1), path, -static_cast<double>(K), 1.0);
  const auto alpha = [p](double t) { return p.alpha(t); };
  const auto beta = [p](double t) { return p.beta(t); };
  const std::int64_t P = grid_steps(1.0, dt);
  const std::int64_t off = K * P;
  double err = 0.0;
  for (std::int64_t j = 0; j <= P; j += 10) {
    const double t = static_cast<double>(j) * dt;
    const auto o = ou_random_periodic_oracle(alpha, beta, p.sigma, path, t, K);
    err = std::max(err, std::abs(o.value - tr.states[static_cast<std::size_t>(off + j)][0]));
  }
  return err;
}

}  // namespace

TEST(SimulateFast, MatchesOuVariationOfConstants) {
  const double dt = 1e-3;
  EXPECT_LE(ou_oracle_sup_error(5, dt), 5.0 * dt);
}

TEST(SimulateFast, StrongOrderOneForAdditiveNoise) {
  double coarse = 0.0;
  double fine = 0.0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    coarse += ou_oracle_sup_error(seed, 2e-3);
    fine += ou_oracle_sup_error(seed + 100, 1e-3);
  }
  const double ratio = coarse / fine;
  EXPECT_GE(ratio, 2.0 / 1.5);
  EXPECT_LE(ratio, 2.0 * 1.5);
}

TEST(SimulateSlowFast, ZeroSlowDriftKeepsXConstant) {
  auto sys = ou_periodic();
  sys.F = constant_field(1, 1, 0.0);
  const auto path = make_path(3, 1e-3, 1);
  const Vector x0 = Vector::Constant(1, 0.7);
  const auto tr = simulate_slow_fast(sys, x0, Vector::Constant(1, 0.2), path, 10.0);
  for (const auto& x : tr.slow.states) ASSERT_EQ(x[0], 0.7);
  // With x frozen the fast block is exactly the frozen fast equation.
  const auto fast = simulate_fast(sys, x0, Vector::Constant(1, 0.2), path, 0.0, 10.0);
  ASSERT_EQ(fast.states.size(), tr.fast.states.size());
  for (std::size_t j = 0; j < fast.states.size(); ++j) ASSERT_TRUE(same_bits(fast.states[j], tr.fast.states[j]));
}

namespace {

// Deterministic toy pair: dY = -(1 + X^2) Y dt, dX = eps (Y^2 - X - 0.1 X^3) dt.
SlowFastSystem deterministic_toy(double eps) {
  SlowFastSystem s = scalar_system(
      make_field(kArgX | kArgY, 1, 1,
                 [](double, const Vector& x, const Vector& y, Matrix& out) { out(0, 0) = -(1.0 + x[0] * x[0]) * y[0]; }),
      constant_field(1, 1, 0.0),
      make_field(kArgX | kArgY, 1, 1, [](double, const Vector& x, const Vector& y, Matrix& out) {
        out(0, 0) = y[0] * y[0] - x[0] - 0.1 * x[0] * x[0] * x[0];
      }));
  s.epsilon = eps;
  return s;
}

std::pair<double, double> rk4_reference(double eps, double x, double y, double T_over_eps) {
  auto f = [eps](double xx, double yy) {
    return std::pair{eps * (yy * yy - xx - 0.1 * xx * xx * xx), -(1.0 + xx * xx) * yy};
  };
  const int n = 200000;
  const double h = T_over_eps / n;
  for (int i = 0; i < n; ++i) {
    auto [k1x, k1y] = f(x, y);
    auto [k2x, k2y] = f(x + 0.5 * h * k1x, y + 0.5 * h * k1y);
    auto [k3x, k3y] = f(x + 0.5 * h * k2x, y + 0.5 * h * k2y);
    auto [k4x, k4y] = f(x + h * k3x, y + h * k3y);
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    y += h / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
  }
  return {x, y};
}

}  // namespace

TEST(SimulateSlowFast, DeterministicToyConvergesAtOrderOne) {
  const double eps = 0.1;
  const auto sys = deterministic_toy(eps);
  const auto [xr, yr] = rk4_reference(eps, 0.5, 1.0, 10.0);
  double errs[2];
  const double dts[2] = {1e-2, 5e-3};
  for (int k = 0; k < 2; ++k) {
    const auto path = make_path(1, dts[k], 1);
    const auto tr = simulate_slow_fast(sys, Vector::Constant(1, 0.5), Vector::Constant(1, 1.0), path, 10.0);
    errs[k] = std::hypot(tr.slow.states.back()[0] - xr, tr.fast.states.back()[0] - yr);
  }
  EXPECT_LE(errs[0], 10.0 * dts[0]);
  EXPECT_NEAR(errs[0] / errs[1], 2.0, 0.3);
}

TEST(LiftedFlow, ZeroTimeIsIdentity) {
  const auto sys = ou_periodic();
  const auto path = make_path(9, 1e-3, 1);
  const auto y = make_lifted(250, 1e-3, Vector::Constant(1, 0.4));
  const auto out = lifted_flow(sys, kX0, y, path, 0.0);
  EXPECT_EQ(out.phase, 250);
  EXPECT_TRUE(same_bits(out.y, y.y));
}

TEST(LiftedFlow, CircleCoordinateRotatesExactly) {
  const auto sys = ou_periodic();
  const auto y = make_lifted(250, 1e-3, Vector::Constant(1, 0.4));
  const auto a = lifted_flow(sys, kX0, y, make_path(1, 1e-3, 1), 1.0);
  const auto b = lifted_flow(sys, kX0, y, make_path(2, 1e-3, 1), 1.0);
  EXPECT_EQ(a.s, 0.25);
  EXPECT_EQ(a.phase, b.phase);
  EXPECT_EQ(a.s, b.s);
  EXPECT_EQ(lifted_flow(sys, kX0, y, make_path(1, 1e-3, 1), 0.9).s, 0.15);
}

TEST(LiftedFlow, CocycleIsBitExact) {
  const double dt = 1e-3;
  const auto sys = toy_turbulence();
  const auto path = make_path(123, dt, 1);
  const Vector x = Vector::Constant(1, 0.3);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> steps(0, 3000);
  std::uniform_int_distribution<int> phase(0, 999);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const double s = steps(rng) * dt;
    const double t = steps(rng) * dt;
    const auto y0 = make_lifted(phase(rng), dt, Vector::Constant(1, normal(rng)));
    const auto direct = lifted_flow(sys, x, y0, path, t + s);
    const auto mid = lifted_flow(sys, x, y0, path, s);
    const auto composed = lifted_flow(sys, x, mid, shift(path, s), t);
    ASSERT_EQ(direct.phase, composed.phase);
    ASSERT_TRUE(same_bits(direct.y, composed.y)) << "trial " << trial;
  }
}

TEST(SimulateFast, TauShiftIdentityIsBitExact) {
  const auto sys = ou_periodic();
  const auto path = make_path(8, 1e-3, 1);
  const Vector y0 = Vector::Constant(1, -0.3);
  const auto a = simulate_fast(sys, kX0, y0, path, 1.25, 3.5);
  const auto b = simulate_fast(sys, kX0, y0, shift(path, 1.0), 0.25, 2.5);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t j = 0; j < a.states.size(); ++j) ASSERT_TRUE(same_bits(a.states[j], b.states[j]));
}

TEST(SystemValidation, CatalogSystemsValidate) {
  EXPECT_NO_THROW(ou_periodic().validate());
  EXPECT_NO_THROW(toy_turbulence().validate());
  EXPECT_NO_THROW(linear_test().validate());
  EXPECT_NO_THROW(polynomial_system(PolynomialParams{}).validate());
}

TEST(SystemValidation, RejectsNonPeriodicDrift) {
  auto sys = scalar_system(
      make_field(kArgT | kArgY, 1, 1, [](double t, const Vector&, const Vector& y, Matrix& out) { out(0, 0) = -y[0] + t; }),
      constant_field(1, 1, 1.0), constant_field(1, 1, 0.0));
  EXPECT_THROW(sys.validate(), InvalidArgument);
  sys.b = make_field(kArgT | kArgY, 1, 1, [](double t, const Vector&, const Vector& y, Matrix& out) {
    out(0, 0) = -y[0] + std::cos(kTwoPi * t);
  });
  EXPECT_NO_THROW(sys.validate());
  sys.epsilon = 1.5;
  EXPECT_THROW(sys.validate(), InvalidArgument);
}

TEST(SystemValidation, MisalignedPeriodThrows) {
  auto sys = ou_periodic();
  EXPECT_THROW(period_steps(sys, 0.3), GridMisalignment);
  EXPECT_EQ(period_steps(sys, 1e-3), 1000);
}

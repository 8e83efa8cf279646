#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "rpavg/catalog.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/measures.hpp"
#include "rpavg/noise.hpp"
#include "rpavg/pullback.hpp"

using namespace rpavg;

static void BM_Philox(benchmark::State& state) {
  PhiloxCounter ctr{0, 0, 0, 0};
  const PhiloxKey key{0x12345678u, 0x9abcdef0u};
  for (auto _ : state) {
    ++ctr[0];
    benchmark::DoNotOptimize(philox4x32_10(ctr, key));
  }
}
BENCHMARK(BM_Philox);

static void BM_BrownianIncrement(benchmark::State& state) {
  const auto path = make_path(1, 1e-3, static_cast<int>(state.range(0)));
  std::vector<double> out(static_cast<std::size_t>(state.range(0)));
  std::int64_t i = 0;
  for (auto _ : state) {
    path.increment(i++, out.data());
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_BrownianIncrement)->Arg(1)->Arg(4);

static void BM_EulerStep(benchmark::State& state) {
  const auto sys = state.range(0) == 0 ? toy_turbulence() : ou_periodic();
  const auto path = make_path(2, 1e-3, 1);
  FastStepper st(sys, path);
  st.set_x(Vector::Zero(1));
  Vector y = Vector::Zero(1);
  std::int64_t phase = 0;
  std::int64_t inc = 0;
  for (auto _ : state) {
    st.step(y, phase, inc++);
    if (++phase == st.period()) phase = 0;
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_EulerStep)->Arg(0)->Arg(1);

static void BM_BLDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  auto draw = [&] {
    std::vector<LiftedState> atoms;
    for (std::size_t i = 0; i < n; ++i) atoms.push_back(make_lifted(static_cast<std::int64_t>(i % 100), 1e-2, Vector::Constant(1, normal(rng))));
    return EmpiricalMeasure::uniform(std::move(atoms));
  };
  const auto mu = draw();
  const auto nu = draw();
  for (auto _ : state) benchmark::DoNotOptimize(bl_distance(mu, nu, CylinderMetric{1.0}).value);
}
BENCHMARK(BM_BLDistance)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_Pullback(benchmark::State& state) {
  const auto sys = ou_periodic();
  PullbackConfig cfg;
  cfg.tol = 1e-4;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto est = pullback_solve(sys, Vector::Zero(1), make_path(++seed, 1e-3, 1), cfg);
    benchmark::DoNotOptimize(est.values.back().y.data());
  }
}
BENCHMARK(BM_Pullback)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "rpavg/pullback.hpp"
#include "rpavg/system.hpp"

namespace rpavg {

struct EmpiricalMeasure {
  std::vector<LiftedState> support;
  std::vector<double> weights;

  std::size_t size() const { return support.size(); }
  static EmpiricalMeasure uniform(std::vector<LiftedState> atoms);
};

struct CylinderMetric {
  double tau = 1.0;

  double circle(double s, double t) const;
  double distance(const LiftedState& a, const LiftedState& b) const;
};

// Shared by every routine that draws pullback samples.
struct SamplingConfig {
  double dt = 1e-3;
  std::uint64_t base_seed = 1;
  PullbackConfig pullback;
  unsigned workers = 1;
};

// Independent seed streams.
enum SeedStream : std::uint64_t {
  kStreamMeasure = 1,
  kStreamTimeAveraged = 2,
  kStreamKrylovStart = 3,
  kStreamKrylovInner = 4,
  kStreamKrylovMeasure = 5,
  kStreamPoincare = 6,
  kStreamSemigroup = 7,
  kStreamStudy = 8,
  kStreamErgodic = 9,
};

struct MeasureSample {
  EmpiricalMeasure measure;
  std::size_t excluded = 0;
  std::vector<std::uint64_t> seeds;
};

// Uniform measure on {S(r, w_i)}; samples whose pullback did not converge are
// dropped and counted, and more than 10% dropped throws SamplingFailure.
MeasureSample empirical_periodic_measure(const SlowFastSystem& system, const Vector& x_frozen,
                                         double r, std::size_t n_samples,
                                         const SamplingConfig& config);

// Per-section measures. With common_samples every section holds S(r_j, w_i)
// for the same set of w_i, which the drift SE relies on.
struct SectionFamily {
  std::vector<std::int64_t> phases;
  std::vector<EmpiricalMeasure> sections;
  bool common_samples = true;
  std::size_t excluded = 0;
};

// Sections at floor(j P / R), j < R, with R <= P.
std::vector<std::int64_t> section_phases(std::int64_t period, std::size_t n_sections);

SectionFamily sample_section_family(const SlowFastSystem& system, const Vector& x_frozen,
                                    std::size_t n_sections, std::size_t n_samples,
                                    const SamplingConfig& config);

// Discretized time average over sections of the periodic measures: atom i sits
// at section i mod R (R <= 64) and uses its own seed, so equal base seeds give
// common random numbers across x.
MeasureSample time_averaged_measure(const SlowFastSystem& system, const Vector& x_frozen,
                                    std::size_t n_samples, std::size_t n_sections,
                                    const SamplingConfig& config);

struct BLOptions {
  std::size_t cap = 512;  // atoms per measure
};

struct BLResult {
  double value = 0.0;
  bool subsampled = false;
};

// Exact bounded-Lipschitz distance of two finite measures, solved as optimal
// transport with cost min(d, 2).
BLResult bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     const CylinderMetric& metric, const BLOptions& options = {});

// Systematic resampling to n equally weighted atoms.
EmpiricalMeasure stratified_subsample(const EmpiricalMeasure& mu, std::size_t n);

// Axis-aligned box in y, optionally restricted in s (default: whole circle).
struct CylinderBox {
  Vector y_lo;
  Vector y_hi;
  double s_lo = 0.0;
  double s_hi = std::numeric_limits<double>::infinity();

  bool contains(const LiftedState& p) const;
};

struct KrylovConfig {
  std::int64_t section_phase = 0;
  std::size_t n_start = 32;
  std::size_t n_inner = 128;
  std::size_t n_measure = 1000;
  std::size_t n_sections = 64;
  SamplingConfig sampling;
};

struct KrylovCurve {
  CylinderBox box;
  double mu_r = 0.0;
  double mu_r_se = 0.0;
  std::vector<double> value;  // index m-1
  std::vector<double> se;
  std::vector<bool> inconclusive;
};

// For each start y_j drawn from the time-averaged measure, estimates the
// probability of lying in the box at the k-th visit to section r, forms the
// Cesaro mean over the first m visits, and reports the mean over starts of
// |Cesaro_m - mu_r(box)|. The SE combines the per-start Monte Carlo error with
// the error of mu_r(box); value < se is flagged inconclusive.
std::vector<KrylovCurve> krylov_bogolyubov_curve(const SlowFastSystem& system,
                                                 const Vector& x_frozen,
                                                 const std::vector<CylinderBox>& boxes,
                                                 int m_max, const KrylovConfig& config);

struct LipschitzProbeConfig {
  std::size_t n_samples = 512;
  std::size_t n_sections = 64;
  SamplingConfig sampling;
  BLOptions bl;
};

struct LipschitzRow {
  std::size_t i = 0;
  std::size_t j = 0;
  double x_distance = 0.0;
  double d_bl = 0.0;
  double ratio = 0.0;
  bool subsampled = false;
};

std::vector<LipschitzRow> measure_lipschitz_probe(const SlowFastSystem& system,
                                                  const std::vector<Vector>& x_list,
                                                  const LipschitzProbeConfig& config);

enum class HullKind { kInflatedBox, kSigmaBox };

struct PoincareConfig {
  HullKind hull = HullKind::kInflatedBox;
  double bandwidth = 0.0;  // inflation h of the bounding box; keep it above the pullback tol
  double k_sigma = 6.0;    // half-width of the sigma box around the sample mean
  std::size_t repeats = 1;
  std::uint64_t base_seed = 1;
  unsigned workers = 1;
};

struct PoincareReport {
  double fraction = 0.0;
  double se = 0.0;
  std::size_t trials = 0;
  Vector hull_lo;
  Vector hull_hi;
};

// Evolves every atom over one period with fresh noise and counts returns
// into the hull of the support.
PoincareReport poincare_section_check(const EmpiricalMeasure& measure, const SlowFastSystem& system,
                                      const Vector& x_frozen, double dt,
                                      const PoincareConfig& config);

}  // namespace rpavg

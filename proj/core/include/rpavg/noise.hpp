#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "rpavg/types.hpp"

namespace rpavg {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Mixes (base, stream, index) into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

// Number of grid steps in t; throws GridMisalignment unless t is a multiple of dt.
std::int64_t grid_steps(double t, double dt, const char* what = "time");

struct TimeGrid {
  double dt = 0.0;
  std::int64_t origin_index = 0;  // index of t = 0

  std::int64_t index(double t) const { return origin_index + grid_steps(t, dt); }
  double time(std::int64_t i) const { return static_cast<double>(i - origin_index) * dt; }
};

// Two-sided Wiener increments keyed on (seed, step index, coordinate pair).
// A shifted path is the same object with a different index offset, so shifts
// compose exactly and never materialize anything.
class BrownianPath {
 public:
  BrownianPath(std::uint64_t seed, TimeGrid grid, int dims);

  const TimeGrid& grid() const { return grid_; }
  double dt() const { return grid_.dt; }
  int dims() const { return dims_; }
  std::uint64_t seed() const { return seed_; }
  std::int64_t offset_steps() const { return offset_; }
  bool spliced() const { return spliced_; }

  // Writes dims() increments ~ N(0, dt) for step [i, i+1).
  void increment(std::int64_t i, double* out) const {
    const std::int64_t a = i + offset_;
    const std::uint64_t s = (spliced_ && a < splice_at_) ? past_seed_ : seed_;
    for (int c = 0; c < dims_; c += 2) {
      double z0 = 0.0;
      double z1 = 0.0;
      normal_pair(s, a, static_cast<std::uint32_t>(c / 2), z0, z1, c + 1 < dims_);
      out[c] = z0 * sqrt_dt_;
      if (c + 1 < dims_) out[c + 1] = z1 * sqrt_dt_;
    }
  }
  Vector increment(std::int64_t i) const {
    Vector v(dims_);
    increment(i, v.data());
    return v;
  }

  // Path viewed from `steps` later: increment(i) of the result is increment(i + steps) here.
  BrownianPath shifted(std::int64_t steps) const;

  // Replaces increments at indices < 0 (in this view) by those of past_seed.
  BrownianPath with_past(std::uint64_t past_seed) const;

  static void normal_pair(std::uint64_t seed, std::int64_t index, std::uint32_t pair,
                          double& z0, double& z1, bool want_second) {
    const auto u = static_cast<std::uint64_t>(index);
    const PhiloxCounter ctr{static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(u >> 32),
                            pair, 0u};
    const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    const PhiloxCounter w = philox4x32_10(ctr, key);
    const std::uint64_t a = ((std::uint64_t{w[0]} << 32) | w[1]) >> 11;
    const std::uint64_t b = ((std::uint64_t{w[2]} << 32) | w[3]) >> 11;
    const double u1 = static_cast<double>(a + 1) * 0x1p-53;  // (0, 1]
    const double u2 = static_cast<double>(b) * 0x1p-53;      // [0, 1)
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    z0 = r * std::cos(phi);
    z1 = want_second ? r * std::sin(phi) : 0.0;
  }

 private:
  TimeGrid grid_;
  int dims_;
  std::uint64_t seed_;
  double sqrt_dt_;
  std::int64_t offset_ = 0;
  bool spliced_ = false;
  std::uint64_t past_seed_ = 0;
  std::int64_t splice_at_ = 0;
};

using ShiftedPath = BrownianPath;

BrownianPath make_path(std::uint64_t seed, double dt, int dims);

// theta_s: s must be a multiple of dt.
ShiftedPath shift(const BrownianPath& path, double s);

}  // namespace rpavg

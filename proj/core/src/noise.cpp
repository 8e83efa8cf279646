#include "rpavg/noise.hpp"

#include <cmath>
#include <sstream>

#include "rpavg/error.hpp"

namespace rpavg {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t z = splitmix64(base ^ splitmix64(stream));
  return splitmix64(z + splitmix64(index ^ 0xD1B54A32D192ED03ull));
}

std::int64_t grid_steps(double t, double dt, const char* what) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidArgument("dt must be positive and finite");
  if (!std::isfinite(t)) {
    std::ostringstream os;
    os << what << " is not finite";
    throw GridMisalignment(os.str());
  }
  const double q = t / dt;
  const double n = std::nearbyint(q);
  if (std::abs(q - n) > 1e-7 * std::max(1.0, std::abs(q)) || std::abs(n) > 9.0e15) {
    std::ostringstream os;
    os.precision(17);
    os << what << " = " << t << " is not an integer multiple of dt = " << dt;
    throw GridMisalignment(os.str());
  }
  return static_cast<std::int64_t>(n);
}

BrownianPath::BrownianPath(std::uint64_t seed, TimeGrid grid, int dims)
    : grid_(grid), dims_(dims), seed_(seed), sqrt_dt_(0.0) {
  if (!(grid.dt > 0.0) || !std::isfinite(grid.dt)) throw InvalidArgument("dt must be positive");
  if (dims < 1) throw InvalidArgument("path dimension must be at least 1");
  sqrt_dt_ = std::sqrt(grid.dt);
}

BrownianPath BrownianPath::shifted(std::int64_t steps) const {
  BrownianPath p = *this;
  p.offset_ += steps;
  return p;
}

BrownianPath BrownianPath::with_past(std::uint64_t past_seed) const {
  BrownianPath p = *this;
  p.spliced_ = true;
  p.past_seed_ = past_seed;
  p.splice_at_ = offset_;
  return p;
}

BrownianPath make_path(std::uint64_t seed, double dt, int dims) {
  return BrownianPath(seed, TimeGrid{dt, 0}, dims);
}

ShiftedPath shift(const BrownianPath& path, double s) {
  return path.shifted(grid_steps(s, path.dt(), "shift"));
}

}  // namespace rpavg

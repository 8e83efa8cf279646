#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rpavg/types.hpp"

namespace rpavg {

enum FieldArg : unsigned { kArgT = 1u, kArgX = 2u, kArgY = 4u };

// A coefficient of the system. `args` records which of (t, x, y) the field
// actually reads; the integrator uses it to skip re-evaluating constant
// diffusion matrices.
struct VectorField {
  using Eval = std::function<void(double t, const Vector& x, const Vector& y, Matrix& out)>;

  unsigned args = kArgT | kArgX | kArgY;
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;
  Eval eval;

  bool reads(FieldArg a) const { return (args & a) != 0u; }
  Matrix operator()(double t, const Vector& x, const Vector& y) const;
  // First column as a vector; convenient for drift-type fields.
  Vector column(double t, const Vector& x, const Vector& y) const;
};

VectorField make_field(unsigned args, Eigen::Index rows, Eigen::Index cols, VectorField::Eval eval);

// dX = eps F(X,Y) dt,  dY = b(t,X,Y) dt + sigma(t,X,Y) dW  on [0, T/eps].
struct SlowFastSystem {
  std::string name;
  int d = 1;
  int N = 1;
  double tau = 1.0;
  double epsilon = 0.1;
  VectorField F;      // (x, y) -> R^d
  VectorField b;      // (t, x, y) -> R^N
  VectorField sigma;  // (t, x, y) -> R^{N x m}, columns sigma_k

  int noise_dims() const { return static_cast<int>(sigma.cols); }

  // Checks dimensions, tau > 0, 0 < eps < 1, and tau-periodicity of b and
  // sigma on a deterministic set of sample points. Throws InvalidArgument.
  void validate() const;
};

// Point (s, y) on the cylinder. The circle coordinate is carried as an exact
// step count; s = phase * dt is derived.
struct LiftedState {
  std::int64_t phase = 0;
  double s = 0.0;
  Vector y;
};

LiftedState make_lifted(std::int64_t phase, double dt, Vector y);

struct Trajectory {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<Vector> states;

  double time(std::size_t j) const { return t0 + static_cast<double>(j) * dt; }
};

// tau / dt, validated to be an integer.
std::int64_t period_steps(const SlowFastSystem& system, double dt);

}  // namespace rpavg

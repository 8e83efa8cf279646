#include "rpavg/catalog.hpp"

#include <cmath>
#include <numbers>

#include "rpavg/error.hpp"

namespace rpavg {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double polyval(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

double OuPeriodicParams::alpha(double t) const { return a0 + a1 * std::cos(kTwoPi * t / tau); }
double OuPeriodicParams::beta(double t) const { return b1 * std::sin(kTwoPi * t / tau); }

double ToyParams::gamma(double x) const { return polyval(gamma_coeffs, x); }

void ToyParams::validate(double x_lo, double x_hi) const {
  if (beta == 0.0) throw InvalidArgument("toy beta must be nonzero");
  if (sigma == 0.0) throw InvalidArgument("toy sigma must be nonzero");
  if (gamma_coeffs.empty()) throw InvalidArgument("toy gamma needs coefficients");
  constexpr int kProbe = 1000;
  for (int i = 0; i <= kProbe; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / kProbe;
    if (!(gamma(x) > 0.0)) throw InvalidArgument("toy gamma(x) must be positive on the x-range");
  }
}

SlowFastSystem ou_periodic(const OuPeriodicParams& p, double epsilon) {
  SlowFastSystem s;
  s.name = "ou_periodic";
  s.d = 1;
  s.N = 1;
  s.tau = p.tau;
  s.epsilon = epsilon;
  s.F = make_field(kArgX | kArgY, 1, 1, [p](double, const Vector& x, const Vector& y, Matrix& o) {
    o(0, 0) = p.f_y * y[0] + p.f_yy * y[0] * y[0] - p.f_x * x[0];
  });
  s.b = make_field(kArgT | kArgY, 1, 1, [p](double t, const Vector&, const Vector& y, Matrix& o) {
    o(0, 0) = -p.alpha(t) * y[0] + p.beta(t);
  });
  s.sigma = make_field(0u, 1, 1, [p](double, const Vector&, const Vector&, Matrix& o) {
    o(0, 0) = p.sigma;
  });
  return s;
}

SlowFastSystem toy_turbulence(const ToyParams& p, double epsilon) {
  SlowFastSystem s;
  s.name = "toy_turbulence";
  s.d = 1;
  s.N = 1;
  s.tau = 1.0;
  s.epsilon = epsilon;
  s.F = make_field(kArgX | kArgY, 1, 1, [p](double, const Vector& x, const Vector& y, Matrix& o) {
    const double xv = x[0];
    o(0, 0) = y[0] * y[0] + p.alpha * xv + p.vartheta * xv * xv * xv;
  });
  s.b = make_field(kArgT | kArgX | kArgY, 1, 1,
                   [p](double t, const Vector& x, const Vector& y, Matrix& o) {
                     o(0, 0) = -p.gamma(x[0]) * y[0] + p.beta * std::cos(kTwoPi * t);
                   });
  s.sigma = make_field(0u, 1, 1, [p](double, const Vector&, const Vector&, Matrix& o) {
    o(0, 0) = p.sigma;
  });
  return s;
}

SlowFastSystem linear_test(const LinearTestParams& p, double epsilon) {
  if (p.A.rows() != p.A.cols() || p.A.rows() < 1)
    throw InvalidArgument("linear_test needs a square matrix A");
  const Eigen::Index n = p.A.rows();
  SlowFastSystem s;
  s.name = "linear_test";
  s.d = 1;
  s.N = static_cast<int>(n);
  s.tau = p.tau;
  s.epsilon = epsilon;
  s.F = make_field(kArgX | kArgY, 1, 1, [](double, const Vector& x, const Vector& y, Matrix& o) {
    o(0, 0) = -x[0] + y[0];
  });
  const Matrix A = p.A;
  s.b = make_field(kArgY, n, 1, [A](double, const Vector&, const Vector& y, Matrix& o) {
    o.col(0).noalias() = -A * y;
  });
  const double sg = p.sigma;
  s.sigma = make_field(0u, n, n, [sg, n](double, const Vector&, const Vector&, Matrix& o) {
    o = sg * Matrix::Identity(n, n);
  });
  return s;
}

SlowFastSystem polynomial_system(const PolynomialParams& p, double epsilon) {
  SlowFastSystem s;
  s.name = "polynomial";
  s.d = 1;
  s.N = 1;
  s.tau = p.tau;
  s.epsilon = epsilon;
  s.F = make_field(kArgX | kArgY, 1, 1, [p](double, const Vector& x, const Vector& y, Matrix& o) {
    o(0, 0) = polyval(p.slow_x, x[0]) + polyval(p.slow_y, y[0]);
  });
  unsigned b_args = kArgY;
  if (!p.coupling_x.empty()) b_args |= kArgX;
  if (p.forcing_cos != 0.0 || p.forcing_sin != 0.0) b_args |= kArgT;
  s.b = make_field(b_args, 1, 1, [p](double t, const Vector& x, const Vector& y, Matrix& o) {
    const double w = kTwoPi * t / p.tau;
    double v = polyval(p.drift_y, y[0]) + p.forcing_cos * std::cos(w) + p.forcing_sin * std::sin(w);
    if (!p.coupling_x.empty()) v -= polyval(p.coupling_x, x[0]) * y[0];
    o(0, 0) = v;
  });
  const unsigned sig_args = p.diffusion_y.size() > 1 ? kArgY : 0u;
  s.sigma = make_field(sig_args, 1, 1, [p](double, const Vector&, const Vector& y, Matrix& o) {
    o(0, 0) = polyval(p.diffusion_y, y[0]);
  });
  return s;
}

std::vector<std::string> catalog_names() {
  return {"ou_periodic", "toy_turbulence", "linear_test", "polynomial"};
}

}  // namespace rpavg

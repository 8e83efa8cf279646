#pragma once

#include <string>
#include <vector>

#include "rpavg/system.hpp"

namespace rpavg {

// dY = (-alpha(t) Y + beta(t)) dt + sigma dW with
// alpha(t) = a0 + a1 cos(2 pi t / tau), beta(t) = b1 sin(2 pi t / tau).
// Slow drift F(x, y) = f_y * y + f_yy * y^2 - f_x * x.
struct OuPeriodicParams {
  double a0 = 2.0;
  double a1 = 1.0;
  double b1 = 1.0;
  double sigma = 1.0;
  double tau = 1.0;
  double f_y = 0.0;
  double f_yy = 1.0;
  double f_x = 0.0;

  double alpha(double t) const;
  double beta(double t) const;
};

// gamma(x) = sum_k gamma_coeffs[k] x^k.
struct ToyParams {
  double alpha = -1.0;
  double vartheta = -0.1;
  double beta = 1.0;
  double sigma = 1.0;
  std::vector<double> gamma_coeffs{1.0, 0.0, 1.0};

  double gamma(double x) const;
  // beta != 0, sigma != 0, gamma > 0 on a fine grid of [x_lo, x_hi].
  void validate(double x_lo, double x_hi) const;
};

// b = -A y, sigma = s I; F(x, y) = -x + y_0.
struct LinearTestParams {
  Matrix A = Matrix::Identity(1, 1);
  double sigma = 1.0;
  double tau = 1.0;
};

// Scalar polynomial family:
//   b(t,x,y) = sum_k drift_y[k] y^k - g(x) y + forcing_cos cos(2 pi t/tau) + forcing_sin sin(2 pi t/tau)
//   g(x) = sum_k coupling_x[k] x^k,   sigma(y) = sum_k diffusion_y[k] y^k
//   F(x,y) = sum_k slow_x[k] x^k + sum_k slow_y[k] y^k
struct PolynomialParams {
  std::vector<double> drift_y{0.0, -1.0};
  std::vector<double> coupling_x{};
  double forcing_cos = 0.0;
  double forcing_sin = 0.0;
  std::vector<double> diffusion_y{1.0};
  std::vector<double> slow_x{0.0, -1.0};
  std::vector<double> slow_y{};
  double tau = 1.0;
};

SlowFastSystem ou_periodic(const OuPeriodicParams& p = {}, double epsilon = 0.1);
SlowFastSystem toy_turbulence(const ToyParams& p = {}, double epsilon = 0.1);
SlowFastSystem linear_test(const LinearTestParams& p = {}, double epsilon = 0.1);
SlowFastSystem polynomial_system(const PolynomialParams& p, double epsilon = 0.1);

double polyval(const std::vector<double>& coeffs, double x);

std::vector<std::string> catalog_names();

}  // namespace rpavg

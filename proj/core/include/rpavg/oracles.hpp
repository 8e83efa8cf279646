#pragma once

#include <functional>

#include "rpavg/catalog.hpp"
#include "rpavg/noise.hpp"

namespace rpavg {

struct OuOracleValue {
  double value = 0.0;
  double truncation_bound = 0.0;
};

// Truncated, discretized evaluation of
//   S(t) = int_{-inf}^t e^{-A(s,t)} beta(s) ds + sigma int_{-inf}^t e^{-A(s,t)} dW_s,
// A(s,t) = int_s^t alpha, using the increments of `path` (coordinate 0) on
// [t - K tau, t). A is integrated with Simpson's rule per grid cell.
OuOracleValue ou_random_periodic_oracle(const std::function<double(double)>& alpha,
                                        const std::function<double(double)>& beta, double sigma,
                                        const BrownianPath& path, double t,
                                        int truncation_periods, double tau = 1.0);

// v(t, x) = (g cos 2 pi t + 2 pi sin 2 pi t) / (4 pi^2 + g^2), g = gamma(x).
double toy_v(double t, double x, const ToyParams& params);
double toy_v_gamma(double t, double gamma);

// int_0^1 v(t, x)^2 dt by Gauss-Kronrod quadrature.
double toy_v2_integral(double x, const ToyParams& params);

// 2 / (gamma^2 + 4 pi^2), four times the integral above; kept only for reporting.
double toy_v2_integral_alt_form(double x, const ToyParams& params);

// sigma^2 / (2 gamma) + beta^2 int v^2 + alpha x + vartheta x^3.
double toy_averaged_drift(double x, const ToyParams& params);

}  // namespace rpavg

#include "rpavg/oracles.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "rpavg/error.hpp"

namespace rpavg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class F>
double integrate(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

}  // namespace

OuOracleValue ou_random_periodic_oracle(const std::function<double(double)>& alpha,
                                        const std::function<double(double)>& beta, double sigma,
                                        const BrownianPath& path, double t,
                                        int truncation_periods, double tau) {
  if (truncation_periods < 5) throw InvalidArgument("OU oracle needs at least 5 truncation periods");
  const double mean_alpha = integrate(alpha, 0.0, tau) / tau;
  if (!(mean_alpha > 0.0)) throw InvalidArgument("OU oracle needs a positive period mean of alpha");
  const double dt = path.dt();
  const std::int64_t nt = grid_steps(t, dt, "t");
  const std::int64_t P = grid_steps(tau, dt, "tau");
  const std::int64_t n0 = nt - static_cast<std::int64_t>(truncation_periods) * P;

  std::vector<double> dw(static_cast<std::size_t>(path.dims()));
  double A = 0.0;  // int_{t_n}^{t} alpha once the cell is added
  double S = 0.0;
  for (std::int64_t n = nt - 1; n >= n0; --n) {
    const double a = static_cast<double>(n) * dt;
    const double b = static_cast<double>(n + 1) * dt;
    A += (b - a) / 6.0 * (alpha(a) + 4.0 * alpha(0.5 * (a + b)) + alpha(b));
    path.increment(n, dw.data());
    S += std::exp(-A) * (beta(a) * dt + sigma * dw[0]);
  }
  return {S, std::exp(-mean_alpha * truncation_periods * tau)};
}

double toy_v_gamma(double t, double gamma) {
  const double w = kTwoPi * t;
  return (gamma * std::cos(w) + kTwoPi * std::sin(w)) / (kTwoPi * kTwoPi + gamma * gamma);
}

double toy_v(double t, double x, const ToyParams& params) { return toy_v_gamma(t, params.gamma(x)); }

double toy_v2_integral(double x, const ToyParams& params) {
  const double g = params.gamma(x);
  return integrate([g](double t) { return toy_v_gamma(t, g) * toy_v_gamma(t, g); }, 0.0, 1.0);
}

double toy_v2_integral_alt_form(double x, const ToyParams& params) {
  const double g = params.gamma(x);
  return 2.0 / (g * g + kTwoPi * kTwoPi);
}

double toy_averaged_drift(double x, const ToyParams& params) {
  const double g = params.gamma(x);
  if (!(g > 0.0)) throw InvalidArgument("toy_averaged_drift requires gamma(x) > 0");
  return params.sigma * params.sigma / (2.0 * g) + params.beta * params.beta * toy_v2_integral(x, params) +
         params.alpha * x + params.vartheta * x * x * x;
}

}  // namespace rpavg

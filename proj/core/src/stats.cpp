#include "rpavg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rpavg {

double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return acc / static_cast<double>(v.size() - 1);
}

double standard_error(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

double variance_standard_error(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 4) return 0.0;
  const double m = mean(v);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : v) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  return std::sqrt(std::max(m4 - m2 * m2, 0.0) / static_cast<double>(n));
}

BatchMeans batch_means(std::span<const double> v, int batches) {
  BatchMeans out;
  out.mean = mean(v);
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 1)), v.size());
  if (b < 2) return out;
  const std::size_t len = v.size() / b;
  std::vector<double> means(b);
  for (std::size_t k = 0; k < b; ++k) means[k] = mean(v.subspan(k * len, len));
  out.se = standard_error(means);
  out.batches = static_cast<int>(b);
  return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = mean(x.first(n));
  const double my = mean(y.first(n));
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / sxx;
}

double ks_statistic_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = 0.5 * std::erfc(-sample[i] / std::sqrt(2.0));
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace rpavg

#pragma once

#include <span>
#include <vector>

namespace rpavg {

double mean(std::span<const double> v);
// Unbiased sample variance; 0 for fewer than two values.
double sample_variance(std::span<const double> v);
double standard_error(std::span<const double> v);
// Large-sample SE of the sample variance, sqrt((m4 - m2^2) / n).
double variance_standard_error(std::span<const double> v);

struct BatchMeans {
  double mean = 0.0;
  double se = 0.0;
  int batches = 0;
};
BatchMeans batch_means(std::span<const double> v, int batches);

// Ordinary least-squares slope of y against x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

// Kolmogorov-Smirnov statistic of a sample against the standard normal cdf.
double ks_statistic_normal(std::vector<double> sample);

}  // namespace rpavg

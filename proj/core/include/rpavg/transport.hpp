#pragma once

#include <span>

#include "rpavg/types.hpp"

namespace rpavg {

// Minimum-cost transport between supply a and demand b (equal totals, within
// rounding) for a dense nonnegative cost matrix, by successive shortest paths
// with Dijkstra on reduced costs.
double min_cost_transport(std::span<const double> a, std::span<const double> b, const Matrix& cost);

}  // namespace rpavg

#include "rpavg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rpavg/error.hpp"

namespace rpavg {

double min_cost_transport(std::span<const double> a, std::span<const double> b, const Matrix& cost) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (static_cast<std::size_t>(cost.rows()) != n || static_cast<std::size_t>(cost.cols()) != m)
    throw InvalidArgument("transport cost matrix has the wrong shape");
  if (n == 0 || m == 0) throw InvalidArgument("transport needs nonempty marginals");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (!(sa > 0.0) || std::abs(sa - sb) > 1e-9 * sa)
    throw InvalidArgument("transport marginals must have equal positive mass");

  std::vector<double> ra(a.begin(), a.end());
  std::vector<double> rb(m);
  for (std::size_t j = 0; j < m; ++j) rb[j] = b[j] * (sa / sb);
  const double tiny = 1e-14 * sa;
  Matrix flow = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));

  const std::size_t V = n + m;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> pot(V, 0.0);
  std::vector<double> dist(V);
  std::vector<std::ptrdiff_t> parent(V);
  std::vector<char> done(V);

  for (;;) {
    double left = 0.0;
    for (double r : ra) left += r;
    if (left <= 1e-12 * sa) break;

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(parent.begin(), parent.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      if (ra[i] > tiny) dist[i] = 0.0;

    std::ptrdiff_t target = -1;
    for (;;) {
      std::ptrdiff_t u = -1;
      double best = kInf;
      for (std::size_t v = 0; v < V; ++v) {
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = static_cast<std::ptrdiff_t>(v);
        }
      }
      if (u < 0) break;
      const auto uu = static_cast<std::size_t>(u);
      done[uu] = 1;
      if (uu >= n) {
        const std::size_t j = uu - n;
        if (rb[j] > tiny) {
          target = u;
          break;
        }
        // Residual backward edges j -> i carry existing flow.
        for (std::size_t i = 0; i < n; ++i) {
          if (done[i] || flow(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= tiny)
            continue;
          const double nd = dist[uu] - cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                            pot[uu] - pot[i];
          if (nd < dist[i]) {
            dist[i] = std::max(nd, dist[uu]);
            parent[i] = u;
          }
        }
      } else {
        for (std::size_t j = 0; j < m; ++j) {
          const std::size_t v = n + j;
          if (done[v]) continue;
          const double nd = dist[uu] + cost(static_cast<Eigen::Index>(uu), static_cast<Eigen::Index>(j)) +
                            pot[uu] - pot[v];
          if (nd < dist[v]) {
            dist[v] = std::max(nd, dist[uu]);
            parent[v] = u;
          }
        }
      }
    }
    if (target < 0) break;

    const double dt = dist[static_cast<std::size_t>(target)];
    for (std::size_t v = 0; v < V; ++v) pot[v] += std::min(dist[v], dt);

    // Bottleneck along the path.
    double delta = rb[static_cast<std::size_t>(target) - n];
    std::ptrdiff_t v = target;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const std::ptrdiff_t p = parent[static_cast<std::size_t>(v)];
      if (static_cast<std::size_t>(v) < n) {
        // v is a supply node reached through a backward edge from demand p.
        delta = std::min(delta, flow(v, static_cast<Eigen::Index>(p - static_cast<std::ptrdiff_t>(n))));
      }
      v = p;
    }
    const std::size_t source = static_cast<std::size_t>(v);
    delta = std::min(delta, ra[source]);

    v = target;
    while (parent[static_cast<std::size_t>(v)] >= 0) {
      const std::ptrdiff_t p = parent[static_cast<std::size_t>(v)];
      if (static_cast<std::size_t>(v) >= n) {
        flow(p, static_cast<Eigen::Index>(v - static_cast<std::ptrdiff_t>(n))) += delta;
      } else {
        flow(v, static_cast<Eigen::Index>(p - static_cast<std::ptrdiff_t>(n))) -= delta;
      }
      v = p;
    }
    ra[source] -= delta;
    rb[static_cast<std::size_t>(target) - n] -= delta;
  }
  return flow.cwiseProduct(cost).sum();
}

}  // namespace rpavg

#include "lp_oracle.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace rpavg::lp {

double simplex_max(const Matrix& A, const Vector& b, const Vector& c) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if ((b.array() < 0.0).any()) throw std::invalid_argument("simplex_max needs b >= 0");
  // Columns: n structural, m slack, then rhs. Last row holds reduced costs.
  Matrix T = Matrix::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m).head(m) = b;
  T.row(m).head(n) = -c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  const double eps = 1e-12;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j)
      if (T(m, j) < -eps) {
        enter = j;
        break;
      }
    if (enter < 0) return T(m, n + m);
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (T(i, enter) > eps) {
        const double ratio = T(i, n + m) / T(i, enter);
        if (ratio < best - eps ||
            (ratio <= best + eps && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
    }
    if (leave < 0) throw std::runtime_error("simplex_max: unbounded");
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i)
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  throw std::runtime_error("simplex_max: iteration limit");
}

double bl_distance_lp(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      const CylinderMetric& metric) {
  std::vector<const LiftedState*> pts;
  std::vector<double> w;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    pts.push_back(&mu.support[i]);
    w.push_back(mu.weights[i]);
  }
  for (std::size_t i = 0; i < nu.size(); ++i) {
    pts.push_back(&nu.support[i]);
    w.push_back(-nu.weights[i]);
  }
  const auto n = static_cast<Eigen::Index>(pts.size());
  // g_i <= 2 and g_i - g_j <= d_ij for i != j.
  const Eigen::Index rows = n + n * (n - 1);
  Matrix A = Matrix::Zero(rows, n);
  Vector b(rows);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i, ++r) {
    A(r, i) = 1.0;
    b[r] = 2.0;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      A(r, i) = 1.0;
      A(r, j) = -1.0;
      b[r] = metric.distance(*pts[static_cast<std::size_t>(i)], *pts[static_cast<std::size_t>(j)]);
      ++r;
    }
  Vector c(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    c[i] = w[static_cast<std::size_t>(i)];
    total += c[i];
  }
  // sum_i w_i f_i = sum_i w_i g_i - sum_i w_i.
  return simplex_max(A, b, c) - total;
}

}  // namespace rpavg::lp

#include "rpavg/system.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "rpavg/error.hpp"
#include "rpavg/noise.hpp"

namespace rpavg {

Matrix VectorField::operator()(double t, const Vector& x, const Vector& y) const {
  Matrix out(rows, cols);
  eval(t, x, y, out);
  return out;
}

Vector VectorField::column(double t, const Vector& x, const Vector& y) const {
  Matrix out(rows, cols);
  eval(t, x, y, out);
  return out.col(0);
}

VectorField make_field(unsigned args, Eigen::Index rows, Eigen::Index cols, VectorField::Eval eval) {
  VectorField f;
  f.args = args;
  f.rows = rows;
  f.cols = cols;
  f.eval = std::move(eval);
  return f;
}

namespace {

void check_field(const VectorField& f, const char* name, Eigen::Index rows, Eigen::Index cols) {
  if (!f.eval) throw InvalidArgument(std::string("field ") + name + " is not set");
  if (f.rows != rows || (cols > 0 && f.cols != cols)) {
    std::ostringstream os;
    os << "field " << name << " has shape " << f.rows << "x" << f.cols << ", expected " << rows
       << "x" << (cols > 0 ? cols : f.cols);
    throw InvalidArgument(os.str());
  }
}

bool close(const Matrix& a, const Matrix& b) {
  const double scale = 1.0 + std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() <= 1e-9 * scale;
}

}  // namespace

void SlowFastSystem::validate() const {
  if (d < 1 || N < 1) throw InvalidArgument("system dimensions d and N must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  check_field(F, "F", d, 1);
  check_field(b, "b", N, 1);
  check_field(sigma, "sigma", N, 0);
  if (sigma.cols < 1) throw InvalidArgument("sigma needs at least one column");

  const double ts[] = {0.0, 0.13, 0.37, 0.71};
  const double vals[] = {0.0, 0.5, -1.0};
  Matrix o1, o2;
  for (double tf : ts) {
    for (double v : vals) {
      const Vector x = Vector::Constant(d, v);
      const Vector y = Vector::Constant(N, -0.7 * v + 0.2);
      const double t = tf * tau;
      o1.resize(N, 1);
      o2.resize(N, 1);
      b.eval(t, x, y, o1);
      b.eval(t + tau, x, y, o2);
      if (!o1.allFinite()) throw InvalidArgument("b is not finite on sample points");
      if (!close(o1, o2)) throw InvalidArgument("b is not tau-periodic in t");
      o1.resize(N, sigma.cols);
      o2.resize(N, sigma.cols);
      sigma.eval(t, x, y, o1);
      sigma.eval(t + tau, x, y, o2);
      if (!o1.allFinite()) throw InvalidArgument("sigma is not finite on sample points");
      if (!close(o1, o2)) throw InvalidArgument("sigma is not tau-periodic in t");
      o1.resize(d, 1);
      F.eval(t, x, y, o1);
      if (!o1.allFinite()) throw InvalidArgument("F is not finite on sample points");
    }
  }
}

LiftedState make_lifted(std::int64_t phase, double dt, Vector y) {
  LiftedState p;
  p.phase = phase;
  p.s = static_cast<double>(phase) * dt;
  p.y = std::move(y);
  return p;
}

std::int64_t period_steps(const SlowFastSystem& system, double dt) {
  const std::int64_t p = grid_steps(system.tau, dt, "tau");
  if (p < 1) throw GridMisalignment("tau must span at least one step");
  return p;
}

}  // namespace rpavg

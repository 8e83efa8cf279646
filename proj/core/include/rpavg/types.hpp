#pragma once

#include <Eigen/Core>

namespace rpavg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace rpavg

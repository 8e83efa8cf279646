#include "rpavg/error.hpp"

#include <sstream>
#include <utility>

namespace rpavg {

namespace {

std::string blowup_message(double t, const Vector& state) {
  std::ostringstream os;
  os << "numerical blowup at t = " << t << ", state = [";
  for (Eigen::Index i = 0; i < state.size(); ++i) os << (i ? ", " : "") << state[i];
  os << "]";
  return os.str();
}

}  // namespace

NumericalBlowup::NumericalBlowup(double t, Vector state)
    : std::runtime_error(blowup_message(t, state)), t_(t), state_(std::move(state)) {}

}  // namespace rpavg

#pragma once

#include <stdexcept>
#include <string>

#include "rpavg/types.hpp"

namespace rpavg {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A time or shift that is not an integer multiple of the grid step.
class GridMisalignment : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalBlowup : public std::runtime_error {
 public:
  NumericalBlowup(double t, Vector state);

  double time() const noexcept { return t_; }
  const Vector& state() const noexcept { return state_; }

 private:
  double t_;
  Vector state_;
};

class ExtrapolationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Too many non-converged pullback samples while building a measure.
class SamplingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rpavg

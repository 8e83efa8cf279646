#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "rpavg/measures.hpp"
#include "rpavg/system.hpp"

namespace rpavg {

// Shortest exact decimal form is not required; 17 significant digits round-trip.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long long v);
  CsvWriter& operator<<(const std::string& v);
  void end_row();

 private:
  void sep();

  std::ostream& out_;
  std::size_t columns_;
  std::size_t col_ = 0;
};

void write_measure_csv(std::ostream& out, const EmpiricalMeasure& mu);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::string& prefix);

}  // namespace rpavg

#include "rpavg/io.hpp"

#include <cstdio>

#include "rpavg/error.hpp"

namespace rpavg {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << '\n';
}

void CsvWriter::sep() {
  if (col_ >= columns_) throw InvalidArgument("CSV row has more fields than the header");
  if (col_ > 0) out_ << ',';
  ++col_;
}

CsvWriter& CsvWriter::operator<<(double v) {
  sep();
  out_ << format_double(v);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long v) {
  sep();
  out_ << v;
  return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& v) {
  sep();
  out_ << v;
  return *this;
}

void CsvWriter::end_row() {
  if (col_ != columns_) throw InvalidArgument("CSV row has fewer fields than the header");
  out_ << '\n';
  col_ = 0;
}

void write_measure_csv(std::ostream& out, const EmpiricalMeasure& mu) {
  const Eigen::Index N = mu.support.empty() ? 0 : mu.support.front().y.size();
  std::vector<std::string> header{"s"};
  for (Eigen::Index i = 0; i < N; ++i) header.push_back("y_" + std::to_string(i + 1));
  header.emplace_back("weight");
  CsvWriter w(out, header);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    w << mu.support[k].s;
    for (Eigen::Index i = 0; i < N; ++i) w << mu.support[k].y[i];
    w << mu.weights[k];
    w.end_row();
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::string& prefix) {
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back(prefix + "_" + std::to_string(i + 1));
  CsvWriter w(out, header);
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    w << traj.time(j);
    for (Eigen::Index i = 0; i < n; ++i) w << traj.states[j][i];
    w.end_row();
  }
}

}  // namespace rpavg

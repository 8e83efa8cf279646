#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rpavg/catalog.hpp"
#include "rpavg/system.hpp"

namespace rpavg::cli {

// Invalid configuration; what() is "<file>:<line>: <field>: <reason>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& field,
              const std::string& reason);
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

struct Budgets {
  std::size_t n_samples = 200;
  int k_max = 40;
  double tol = 1e-6;
  double T_erg = 1000.0;
  double burn_in = 10.0;
  int n_batches = 32;
  std::size_t n_mc = 50;
  std::size_t n_sections = 64;
  double T = 1.0;  // slow time horizon
};

struct SimulateOptions {
  std::string mode = "coupled";  // coupled | fast
  double x0 = 0.0;
  std::vector<double> y0;        // empty: zeros
  double T_fast = 10.0;
  std::int64_t stride = 1;
};

struct PullbackOptions {
  int window_periods = 1;
  std::vector<double> anchor_y;  // empty: zeros
  bool verify = true;
  int stability_periods = 0;     // 0 disables the decay probe
};

struct MeasureOptions {
  double r = 0.0;
  std::size_t bl_cap = 512;
  bool lipschitz = true;
  bool poincare = true;
};

struct ErgodicityOptions {
  double r = 0.0;
  std::size_t n_start = 32;
  std::size_t n_inner = 128;
  std::size_t n_measure = 1000;
  int m_max = 32;
};

struct DiagnoseOptions {
  std::vector<double> y0;  // empty: ones
  std::vector<double> z0;  // empty: minus ones
  double T = 10.0;
  double box_lo = -3.0;
  double box_hi = 3.0;
  std::size_t n_pairs = 1000;
  int max_level = 3;
  double probe_t = 1.0;
  std::size_t n_paths = 1000;
};

struct AverageOptions {
  std::vector<std::string> methods{"ergodic"};
  bool ode = true;
  double ode_x0 = 0.0;
};

struct VerifyOptions {
  std::string fbar = "auto";  // auto | closed_form | ergodic | measure
};

struct ExperimentConfig {
  std::string source;
  std::string system = "toy_turbulence";
  OuPeriodicParams ou;
  ToyParams toy;
  LinearTestParams linear;
  PolynomialParams poly;

  double dt = 1e-3;
  double tau = 1.0;
  std::vector<double> epsilons{0.1};
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> x_grid{0.0};
  std::string output = "out";
  unsigned workers = 1;

  Budgets budgets;
  SimulateOptions simulate;
  PullbackOptions pullback;
  MeasureOptions measure;
  ErgodicityOptions ergodicity;
  DiagnoseOptions diagnose;
  AverageOptions average;
  VerifyOptions verify;

  // Line of each field that was present in the file.
  std::map<std::string, int> lines;

  SlowFastSystem make_system(double epsilon) const;
  int fast_dims() const;
  nlohmann::json to_json() const;
  // Adds offset to every seed.
  void offset_seeds(std::uint64_t offset);
};

ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace rpavg::cli

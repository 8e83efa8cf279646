#include "rpavg_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rpavg/error.hpp"
#include "rpavg/noise.hpp"
#include "rpavg_cli/toml_lite.hpp"

namespace rpavg::cli {

ConfigError::ConfigError(const std::string& source, int line, const std::string& field,
                         const std::string& reason)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " +
                         (field.empty() ? reason : field + ": " + reason)),
      line_(line),
      field_(field) {}

namespace {

// Typed access to one [section] that remembers which keys were read, so that
// leftovers (typos) can be reported with their line.
class Section {
 public:
  Section(const TomlTable* table, std::string name, ExperimentConfig& cfg)
      : t_(table), name_(std::move(name)), cfg_(cfg) {}

  bool has(const std::string& key) const { return t_ && t_->values.count(key); }

  const TomlValue* find(const std::string& key) {
    if (!t_) return nullptr;
    auto it = t_->values.find(key);
    if (it == t_->values.end()) return nullptr;
    used_.insert(key);
    cfg_.lines[field(key)] = it->second.line;
    return &it->second;
  }

  std::string field(const std::string& key) const { return name_ + "." + key; }

  [[noreturn]] void fail(const std::string& key, const std::string& reason) const {
    int line = t_ ? t_->line : 0;
    if (t_) {
      auto it = t_->values.find(key);
      if (it != t_->values.end()) line = it->second.line;
    }
    throw ConfigError(cfg_.source, line, field(key), reason);
  }

  void get(const std::string& key, double& out) {
    if (const auto* v = find(key)) out = number(key, *v);
  }
  void get(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (v->kind != TomlValue::Kind::kBool) fail(key, "expected a boolean, got " + v->kind_name());
      out = v->b;
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) {
      if (v->kind != TomlValue::Kind::kString) fail(key, "expected a string, got " + v->kind_name());
      out = v->s;
    }
  }
  template <class Int>
    requires std::is_integral_v<Int>
  void get_count(const std::string& key, Int& out, std::int64_t min_value) {
    if (const auto* v = find(key)) out = static_cast<Int>(integer(key, *v, min_value));
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (const auto* v = find(key)) {
      const auto& arr = array(key, *v);
      out.clear();
      for (const auto& e : arr) out.push_back(number(key, e));
    }
  }
  void get(const std::string& key, std::vector<std::string>& out) {
    if (const auto* v = find(key)) {
      const auto& arr = array(key, *v);
      out.clear();
      for (const auto& e : arr) {
        if (e.kind != TomlValue::Kind::kString) fail(key, "expected an array of strings");
        out.push_back(e.s);
      }
    }
  }
  void get(const std::string& key, std::vector<std::uint64_t>& out) {
    if (const auto* v = find(key)) {
      const auto& arr = array(key, *v);
      out.clear();
      for (const auto& e : arr) out.push_back(static_cast<std::uint64_t>(integer(key, e, 0)));
    }
  }
  void get(const std::string& key, Matrix& out) {
    if (const auto* v = find(key)) {
      const auto& rows = array(key, *v);
      if (rows.empty()) fail(key, "matrix must not be empty");
      const auto n = static_cast<Eigen::Index>(rows.size());
      out.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        if (row.kind != TomlValue::Kind::kArray || static_cast<Eigen::Index>(row.array.size()) != n)
          fail(key, "expected a square matrix given as an array of rows");
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = number(key, row.array[static_cast<std::size_t>(j)]);
      }
    }
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [key, v] : t_->values)
      if (!used_.count(key)) throw ConfigError(cfg_.source, v.line, field(key), "unknown key");
    for (const auto& [key, sub] : t_->tables)
      throw ConfigError(cfg_.source, sub.line, field(key), "unknown table");
  }

 private:
  double number(const std::string& key, const TomlValue& v) const {
    if (!v.is_number()) fail(key, "expected a number, got " + v.kind_name());
    return v.as_double();
  }
  std::int64_t integer(const std::string& key, const TomlValue& v, std::int64_t min_value) const {
    if (v.kind != TomlValue::Kind::kInt) fail(key, "expected an integer, got " + v.kind_name());
    if (v.i < min_value) fail(key, "must be at least " + std::to_string(min_value));
    return v.i;
  }
  const std::vector<TomlValue>& array(const std::string& key, const TomlValue& v) const {
    if (v.kind != TomlValue::Kind::kArray) fail(key, "expected an array, got " + v.kind_name());
    return v.array;
  }

  const TomlTable* t_;
  std::string name_;
  ExperimentConfig& cfg_;
  std::set<std::string> used_;
};

const TomlTable* sub(const TomlTable& root, const std::string& name) {
  auto it = root.tables.find(name);
  return it == root.tables.end() ? nullptr : &it->second;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int line_of(const ExperimentConfig& cfg, const std::string& field) {
  auto it = cfg.lines.find(field);
  return it == cfg.lines.end() ? 0 : it->second;
}

[[noreturn]] void fail_at(const ExperimentConfig& cfg, const std::string& field,
                          const std::string& reason) {
  throw ConfigError(cfg.source, line_of(cfg, field), field, reason);
}

void read_system(const TomlTable* table, ExperimentConfig& cfg) {
  Section s(table, "system", cfg);
  if (cfg.system == "ou_periodic") {
    auto& p = cfg.ou;
    s.get("a0", p.a0);
    s.get("a1", p.a1);
    s.get("b1", p.b1);
    s.get("sigma", p.sigma);
    s.get("f_y", p.f_y);
    s.get("f_yy", p.f_yy);
    s.get("f_x", p.f_x);
    if (!(p.a0 > 0.0)) s.fail("a0", "the period mean of alpha must be positive");
  } else if (cfg.system == "toy_turbulence") {
    auto& p = cfg.toy;
    s.get("alpha", p.alpha);
    s.get("vartheta", p.vartheta);
    s.get("beta", p.beta);
    s.get("sigma", p.sigma);
    s.get("gamma", p.gamma_coeffs);
    if (p.beta == 0.0) s.fail("beta", "must be nonzero");
    if (p.sigma == 0.0) s.fail("sigma", "must be nonzero");
    if (p.gamma_coeffs.empty()) s.fail("gamma", "needs at least one coefficient");
  } else if (cfg.system == "linear_test") {
    auto& p = cfg.linear;
    s.get("A", p.A);
    s.get("sigma", p.sigma);
  } else if (cfg.system == "polynomial") {
    auto& p = cfg.poly;
    s.get("drift_y", p.drift_y);
    s.get("coupling_x", p.coupling_x);
    s.get("forcing_cos", p.forcing_cos);
    s.get("forcing_sin", p.forcing_sin);
    s.get("diffusion_y", p.diffusion_y);
    s.get("slow_x", p.slow_x);
    s.get("slow_y", p.slow_y);
  }
  s.finish();
}

void check_system_name(const ExperimentConfig& cfg) {
  const auto& cats = catalog_names();
  if (std::find(cats.begin(), cats.end(), cfg.system) == cats.end()) {
    std::string names;
    for (const auto& n : cats) names += (names.empty() ? "" : ", ") + n;
    fail_at(cfg, "experiment.system", "unknown system '" + cfg.system + "' (known: " + names + ")");
  }
}

void validate(ExperimentConfig& cfg) {
  const std::string e = "experiment.";
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) fail_at(cfg, e + "dt", "must be positive");
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) fail_at(cfg, e + "tau", "must be positive");
  try {
    grid_steps(cfg.tau, cfg.dt, "tau");
  } catch (const GridMisalignment&) {
    fail_at(cfg, e + "tau", "tau = " + fmt(cfg.tau) + " is not an integer multiple of dt = " + fmt(cfg.dt));
  }
  if (cfg.epsilons.empty()) fail_at(cfg, e + "epsilons", "needs at least one value");
  for (double eps : cfg.epsilons) {
    if (!(eps > 0.0 && eps < std::exp(-1.0)))
      fail_at(cfg, e + "epsilons", "epsilon = " + fmt(eps) + " is outside (0, 1/e)");
    try {
      grid_steps(cfg.budgets.T / eps, cfg.dt, "T/epsilon");
    } catch (const GridMisalignment&) {
      fail_at(cfg, e + "epsilons",
              "T/epsilon = " + fmt(cfg.budgets.T / eps) + " is not an integer multiple of dt");
    }
  }
  if (cfg.seeds.empty()) fail_at(cfg, e + "seeds", "needs at least one seed");
  {
    std::set<std::uint64_t> uniq(cfg.seeds.begin(), cfg.seeds.end());
    if (uniq.size() != cfg.seeds.size()) fail_at(cfg, e + "seeds", "seeds must be distinct");
  }
  if (cfg.x_grid.empty()) fail_at(cfg, e + "x_grid", "needs at least one point");
  for (std::size_t i = 0; i < cfg.x_grid.size(); ++i) {
    if (!std::isfinite(cfg.x_grid[i])) fail_at(cfg, e + "x_grid", "values must be finite");
    if (i > 0 && !(cfg.x_grid[i] > cfg.x_grid[i - 1]))
      fail_at(cfg, e + "x_grid", "must be strictly increasing");
  }
  if (cfg.output.empty()) fail_at(cfg, e + "output", "must not be empty");

  const std::string b = "budgets.";
  if (!(cfg.budgets.tol > 0.0)) fail_at(cfg, b + "tol", "must be positive");
  if (cfg.budgets.k_max < 2) fail_at(cfg, b + "k_max", "must be at least 2");
  if (!(cfg.budgets.T > 0.0)) fail_at(cfg, b + "T", "must be positive");
  if (!(cfg.budgets.burn_in >= 0.0)) fail_at(cfg, b + "burn_in", "must be nonnegative");
  if (!(cfg.budgets.T_erg > 0.0)) fail_at(cfg, b + "T_erg", "must be positive");
  for (const char* key : {"T_erg", "burn_in"}) {
    const double v = std::string(key) == "T_erg" ? cfg.budgets.T_erg : cfg.budgets.burn_in;
    try {
      grid_steps(v, cfg.dt, key);
    } catch (const GridMisalignment&) {
      fail_at(cfg, b + key, fmt(v) + " is not an integer multiple of dt");
    }
  }
  if (cfg.budgets.n_sections > static_cast<std::size_t>(std::llround(cfg.tau / cfg.dt)))
    fail_at(cfg, b + "n_sections", "exceeds the number of steps per period");

  const int N = cfg.fast_dims();
  auto check_dims = [&](const std::vector<double>& v, const std::string& field) {
    if (!v.empty() && static_cast<int>(v.size()) != N)
      fail_at(cfg, field, "expected " + std::to_string(N) + " entries, got " + std::to_string(v.size()));
  };
  check_dims(cfg.simulate.y0, "simulate.y0");
  check_dims(cfg.pullback.anchor_y, "pullback.anchor_y");
  check_dims(cfg.diagnose.y0, "diagnose.y0");
  check_dims(cfg.diagnose.z0, "diagnose.z0");
  if (cfg.simulate.mode != "coupled" && cfg.simulate.mode != "fast")
    fail_at(cfg, "simulate.mode", "expected \"coupled\" or \"fast\"");
  if (!(cfg.diagnose.box_hi > cfg.diagnose.box_lo))
    fail_at(cfg, "diagnose.box_hi", "must exceed box_lo");
  for (const auto& m : cfg.average.methods)
    if (m != "ergodic" && m != "measure" && m != "closed_form")
      fail_at(cfg, "average.methods", "unknown method '" + m + "'");
  if (cfg.average.methods.empty()) fail_at(cfg, "average.methods", "needs at least one method");
  const bool toy = cfg.system == "toy_turbulence";
  for (const auto& m : cfg.average.methods)
    if (m == "closed_form" && !toy) fail_at(cfg, "average.methods", "closed_form needs toy_turbulence");
  const auto& f = cfg.verify.fbar;
  if (f != "auto" && f != "closed_form" && f != "ergodic" && f != "measure")
    fail_at(cfg, "verify_averaging.fbar", "unknown value '" + f + "'");
  if (f == "closed_form" && !toy) fail_at(cfg, "verify_averaging.fbar", "closed_form needs toy_turbulence");

  if (toy) {
    try {
      cfg.toy.validate(cfg.x_grid.front(), cfg.x_grid.back());
    } catch (const InvalidArgument& ex) {
      fail_at(cfg, "system.gamma", ex.what());
    }
  }
  try {
    cfg.make_system(cfg.epsilons.front()).validate();
  } catch (const InvalidArgument& ex) {
    fail_at(cfg, e + "tau", std::string("system rejected: ") + ex.what());
  }
}

}  // namespace

SlowFastSystem ExperimentConfig::make_system(double epsilon) const {
  if (system == "ou_periodic") {
    auto p = ou;
    p.tau = tau;
    return ou_periodic(p, epsilon);
  }
  if (system == "linear_test") {
    auto p = linear;
    p.tau = tau;
    return linear_test(p, epsilon);
  }
  if (system == "polynomial") {
    auto p = poly;
    p.tau = tau;
    return polynomial_system(p, epsilon);
  }
  auto sys = toy_turbulence(toy, epsilon);
  sys.tau = tau;
  return sys;
}

int ExperimentConfig::fast_dims() const {
  return system == "linear_test" ? static_cast<int>(linear.A.rows()) : 1;
}

void ExperimentConfig::offset_seeds(std::uint64_t offset) {
  for (auto& s : seeds) s += offset;
}

nlohmann::json ExperimentConfig::to_json() const {
  using nlohmann::json;
  json sys;
  if (system == "ou_periodic") {
    sys = {{"a0", ou.a0}, {"a1", ou.a1}, {"b1", ou.b1}, {"sigma", ou.sigma},
           {"f_y", ou.f_y}, {"f_yy", ou.f_yy}, {"f_x", ou.f_x}};
  } else if (system == "toy_turbulence") {
    sys = {{"alpha", toy.alpha}, {"vartheta", toy.vartheta}, {"beta", toy.beta},
           {"sigma", toy.sigma}, {"gamma", toy.gamma_coeffs}};
  } else if (system == "linear_test") {
    json rows = json::array();
    for (Eigen::Index i = 0; i < linear.A.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < linear.A.cols(); ++j) row.push_back(linear.A(i, j));
      rows.push_back(row);
    }
    sys = {{"A", rows}, {"sigma", linear.sigma}};
  } else {
    sys = {{"drift_y", poly.drift_y},         {"coupling_x", poly.coupling_x},
           {"forcing_cos", poly.forcing_cos}, {"forcing_sin", poly.forcing_sin},
           {"diffusion_y", poly.diffusion_y}, {"slow_x", poly.slow_x},
           {"slow_y", poly.slow_y}};
  }
  json j;
  j["experiment"] = {{"system", system}, {"dt", dt},         {"tau", tau},
                     {"epsilons", epsilons}, {"seeds", seeds}, {"x_grid", x_grid},
                     {"output", output}, {"workers", workers}};
  j["system"] = sys;
  j["budgets"] = {{"n_samples", budgets.n_samples}, {"k_max", budgets.k_max},
                  {"tol", budgets.tol},             {"T_erg", budgets.T_erg},
                  {"burn_in", budgets.burn_in},     {"n_batches", budgets.n_batches},
                  {"n_mc", budgets.n_mc},           {"n_sections", budgets.n_sections},
                  {"T", budgets.T}};
  j["simulate"] = {{"mode", simulate.mode}, {"x0", simulate.x0}, {"y0", simulate.y0},
                   {"T_fast", simulate.T_fast}, {"stride", simulate.stride}};
  j["pullback"] = {{"window_periods", pullback.window_periods}, {"anchor_y", pullback.anchor_y},
                   {"verify", pullback.verify}, {"stability_periods", pullback.stability_periods}};
  j["measure"] = {{"r", measure.r}, {"bl_cap", measure.bl_cap}, {"lipschitz", measure.lipschitz},
                  {"poincare", measure.poincare}};
  j["ergodicity"] = {{"r", ergodicity.r},          {"n_start", ergodicity.n_start},
                     {"n_inner", ergodicity.n_inner}, {"n_measure", ergodicity.n_measure},
                     {"m_max", ergodicity.m_max}};
  j["diagnose"] = {{"y0", diagnose.y0},         {"z0", diagnose.z0},
                   {"T", diagnose.T},           {"box_lo", diagnose.box_lo},
                   {"box_hi", diagnose.box_hi}, {"n_pairs", diagnose.n_pairs},
                   {"max_level", diagnose.max_level}, {"probe_t", diagnose.probe_t},
                   {"n_paths", diagnose.n_paths}};
  j["average"] = {{"methods", average.methods}, {"ode", average.ode}, {"ode_x0", average.ode_x0}};
  j["verify_averaging"] = {{"fbar", verify.fbar}};
  return j;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  cfg.source = source;
  TomlTable root;
  try {
    root = parse_toml(text);
  } catch (const TomlError& e) {
    std::string msg = e.what();
    const auto p = msg.find(": ");
    throw ConfigError(source, e.line(), "", p == std::string::npos ? msg : msg.substr(p + 2));
  }
  for (const auto& [key, v] : root.values)
    throw ConfigError(source, v.line, key, "keys must live inside a [table]");
  static const std::set<std::string> known{"experiment", "system",     "budgets",
                                           "simulate",   "pullback",   "measure",
                                           "ergodicity", "diagnose",   "average",
                                           "verify_averaging"};
  for (const auto& [name, t] : root.tables)
    if (!known.count(name)) throw ConfigError(source, t.line, name, "unknown table");

  if (!sub(root, "experiment")) throw ConfigError(source, 1, "experiment", "missing [experiment] table");
  {
    Section s(sub(root, "experiment"), "experiment", cfg);
    if (!s.has("system")) s.fail("system", "required");
    s.get("system", cfg.system);
    s.get("dt", cfg.dt);
    s.get("tau", cfg.tau);
    s.get("epsilons", cfg.epsilons);
    s.get("seeds", cfg.seeds);
    s.get("x_grid", cfg.x_grid);
    s.get("output", cfg.output);
    s.get_count("workers", cfg.workers, 0);
    s.finish();
  }
  check_system_name(cfg);
  read_system(sub(root, "system"), cfg);
  {
    Section s(sub(root, "budgets"), "budgets", cfg);
    auto& b = cfg.budgets;
    s.get_count("n_samples", b.n_samples, 1);
    s.get_count("k_max", b.k_max, 2);
    s.get("tol", b.tol);
    s.get("T_erg", b.T_erg);
    s.get("burn_in", b.burn_in);
    s.get_count("n_batches", b.n_batches, 16);
    s.get_count("n_mc", b.n_mc, 30);
    s.get_count("n_sections", b.n_sections, 1);
    s.get("T", b.T);
    s.finish();
  }
  cfg.simulate.x0 = cfg.x_grid.front();
  cfg.average.ode_x0 = cfg.x_grid.front();
  {
    Section s(sub(root, "simulate"), "simulate", cfg);
    s.get("mode", cfg.simulate.mode);
    s.get("x0", cfg.simulate.x0);
    s.get("y0", cfg.simulate.y0);
    s.get("T_fast", cfg.simulate.T_fast);
    s.get_count("stride", cfg.simulate.stride, 1);
    s.finish();
  }
  {
    Section s(sub(root, "pullback"), "pullback", cfg);
    s.get_count("window_periods", cfg.pullback.window_periods, 1);
    s.get("anchor_y", cfg.pullback.anchor_y);
    s.get("verify", cfg.pullback.verify);
    s.get_count("stability_periods", cfg.pullback.stability_periods, 0);
    s.finish();
  }
  {
    Section s(sub(root, "measure"), "measure", cfg);
    s.get("r", cfg.measure.r);
    s.get_count("bl_cap", cfg.measure.bl_cap, 1);
    s.get("lipschitz", cfg.measure.lipschitz);
    s.get("poincare", cfg.measure.poincare);
    s.finish();
  }
  {
    Section s(sub(root, "ergodicity"), "ergodicity", cfg);
    auto& o = cfg.ergodicity;
    s.get("r", o.r);
    s.get_count("n_start", o.n_start, 2);
    s.get_count("n_inner", o.n_inner, 2);
    s.get_count("n_measure", o.n_measure, 2);
    s.get_count("m_max", o.m_max, 2);
    s.finish();
  }
  {
    Section s(sub(root, "diagnose"), "diagnose", cfg);
    auto& o = cfg.diagnose;
    s.get("y0", o.y0);
    s.get("z0", o.z0);
    s.get("T", o.T);
    s.get("box_lo", o.box_lo);
    s.get("box_hi", o.box_hi);
    s.get_count("n_pairs", o.n_pairs, 100);
    s.get_count("max_level", o.max_level, 0);
    s.get("probe_t", o.probe_t);
    s.get_count("n_paths", o.n_paths, 2);
    s.finish();
  }
  {
    Section s(sub(root, "average"), "average", cfg);
    s.get("methods", cfg.average.methods);
    s.get("ode", cfg.average.ode);
    s.get("ode_x0", cfg.average.ode_x0);
    s.finish();
  }
  {
    Section s(sub(root, "verify_averaging"), "verify_averaging", cfg);
    s.get("fbar", cfg.verify.fbar);
    s.finish();
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.string());
}

}  // namespace rpavg::cli

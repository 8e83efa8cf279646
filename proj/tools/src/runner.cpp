#include "rpavg_cli/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include <nlohmann/json.hpp>

#include "rpavg/averaging.hpp"
#include "rpavg/diagnostics.hpp"
#include "rpavg/error.hpp"
#include "rpavg/integrator.hpp"
#include "rpavg/io.hpp"
#include "rpavg/measures.hpp"
#include "rpavg/oracles.hpp"
#include "rpavg/pullback.hpp"
#include "rpavg/stats.hpp"
#include "rpavg/version.hpp"

namespace rpavg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  const ExperimentConfig& cfg;
  std::ostream& log;
  fs::path out;
  json results = json::object();
  std::string stage = "setup";

  std::ofstream open(const std::string& name) const {
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (out / name).string());
    return f;
  }
  void enter(const std::string& s) {
    stage = s;
    log << "[" << s << "]\n";
  }
  SlowFastSystem system() const { return cfg.make_system(cfg.epsilons.front()); }
  Vector x(double v) const { return Vector::Constant(1, v); }

  PullbackConfig pullback() const {
    PullbackConfig p;
    p.k_max = cfg.budgets.k_max;
    p.tol = cfg.budgets.tol;
    if (!cfg.pullback.anchor_y.empty())
      p.anchor = make_lifted(0, cfg.dt, Eigen::Map<const Vector>(cfg.pullback.anchor_y.data(),
                                                                  static_cast<Eigen::Index>(cfg.pullback.anchor_y.size())));
    return p;
  }
  SamplingConfig sampling() const {
    SamplingConfig s;
    s.dt = cfg.dt;
    s.base_seed = cfg.seeds.front();
    s.pullback = pullback();
    s.workers = cfg.workers;
    return s;
  }
  Vector vec_or(const std::vector<double>& v, double fill) const {
    if (v.empty()) return Vector::Constant(cfg.fast_dims(), fill);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  std::int64_t phase_of(double r, const char* what) const {
    const std::int64_t P = grid_steps(cfg.tau, cfg.dt, "tau");
    return wrap_phase(grid_steps(r, cfg.dt, what), P);
  }
};

std::vector<std::string> y_columns(const std::string& prefix, int n) {
  std::vector<std::string> cols;
  for (int i = 0; i < n; ++i) cols.push_back(prefix + std::to_string(i + 1));
  return cols;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

AveragedField toy_fbar(const ToyParams& p) {
  return [p](const Vector& x) { return Vector::Constant(1, toy_averaged_drift(x[0], p)); };
}

DriftBudgets drift_budgets(const Context& c) {
  DriftBudgets b;
  b.dt = c.cfg.dt;
  b.T_erg = c.cfg.budgets.T_erg;
  b.burn_in = c.cfg.budgets.burn_in;
  b.n_batches = c.cfg.budgets.n_batches;
  b.n_samples = c.cfg.budgets.n_samples;
  b.n_sections = c.cfg.budgets.n_sections;
  b.base_seed = c.cfg.seeds.front();
  b.pullback = c.pullback();
  b.workers = c.cfg.workers;
  if (c.cfg.system == "toy_turbulence") b.closed_form = toy_fbar(c.cfg.toy);
  return b;
}

DriftMethod parse_method(const std::string& m) {
  if (m == "ergodic") return DriftMethod::kErgodic;
  if (m == "measure") return DriftMethod::kMeasure;
  return DriftMethod::kClosedForm;
}

// ---------------------------------------------------------------- simulate

void cmd_simulate(Context& c) {
  const auto& cfg = c.cfg;
  const int N = cfg.fast_dims();
  const Vector y0 = c.vec_or(cfg.simulate.y0, 0.0);
  const auto stride = static_cast<std::size_t>(cfg.simulate.stride);
  json runs = json::array();
  c.enter("simulate");
  if (cfg.simulate.mode == "fast") {
    auto f = c.open("trajectory.csv");
    CsvWriter w(f, concat({"seed", "t"}, y_columns("y_", N)));
    const auto sys = c.system();
    for (auto seed : cfg.seeds) {
      const auto path = make_path(seed, cfg.dt, sys.noise_dims());
      const auto traj = simulate_fast(sys, c.x(cfg.simulate.x0), y0, path, 0.0, cfg.simulate.T_fast);
      for (std::size_t j = 0; j < traj.states.size(); j += stride) {
        w << static_cast<long long>(seed) << traj.time(j);
        for (Eigen::Index k = 0; k < N; ++k) w << traj.states[j][k];
        w.end_row();
      }
      runs.push_back({{"seed", seed}, {"y_final", to_json(traj.states.back())}});
    }
  } else {
    auto f = c.open("trajectory.csv");
    CsvWriter w(f, concat({"seed", "epsilon", "t", "x_1"}, y_columns("y_", N)));
    for (double eps : cfg.epsilons) {
      const auto sys = cfg.make_system(eps);
      for (auto seed : cfg.seeds) {
        const auto path = make_path(seed, cfg.dt, sys.noise_dims());
        const auto tr = simulate_slow_fast(sys, c.x(cfg.simulate.x0), y0, path, cfg.budgets.T / eps);
        for (std::size_t j = 0; j < tr.slow.states.size(); j += stride) {
          w << static_cast<long long>(seed) << eps << tr.slow.time(j) << tr.slow.states[j][0];
          for (Eigen::Index k = 0; k < N; ++k) w << tr.fast.states[j][k];
          w.end_row();
        }
        runs.push_back({{"seed", seed},
                        {"epsilon", eps},
                        {"x_final", to_json(tr.slow.states.back())},
                        {"y_final", to_json(tr.fast.states.back())}});
      }
    }
  }
  c.results["runs"] = runs;
}

// ---------------------------------------------------------------- pullback

void cmd_pullback(Context& c) {
  const auto& cfg = c.cfg;
  const auto sys = c.system();
  const int N = cfg.fast_dims();
  auto fsol = c.open("pullback_solution.csv");
  auto fconv = c.open("pullback_convergence.csv");
  CsvWriter wsol(fsol, concat({"x", "seed", "r"}, y_columns("y_", N)));
  CsvWriter wconv(fconv, {"x", "seed", "k", "sup_diff"});
  std::ofstream fdecay;
  std::unique_ptr<CsvWriter> wdecay;
  if (cfg.pullback.stability_periods > 0) {
    fdecay = c.open("pullback_decay.csv");
    wdecay = std::make_unique<CsvWriter>(fdecay, std::vector<std::string>{"x", "seed", "delta", "k", "diff"});
  }
  json runs = json::array();
  bool all_converged = true;
  std::vector<double> rates;
  for (double xv : cfg.x_grid) {
    for (auto seed : cfg.seeds) {
      c.enter("pullback x=" + format_double(xv) + " seed=" + std::to_string(seed));
      const auto path = make_path(seed, cfg.dt, sys.noise_dims());
      PullbackConfig pc = c.pullback();
      pc.window_periods = cfg.pullback.window_periods;
      const auto est = pullback_solve(sys, c.x(xv), path, pc);
      for (std::size_t j = 0; j < est.values.size(); ++j) {
        wsol << xv << static_cast<long long>(seed) << est.r_grid[j];
        for (Eigen::Index k = 0; k < N; ++k) wsol << est.values[j].y[k];
        wsol.end_row();
      }
      for (std::size_t k = 0; k < est.sup_diffs.size(); ++k) {
        wconv << xv << static_cast<long long>(seed) << static_cast<long long>(k + 1) << est.sup_diffs[k];
        wconv.end_row();
      }
      json run = {{"x", xv},
                  {"seed", seed},
                  {"converged", est.converged},
                  {"k_used", est.k_used},
                  {"rate", est.rate_estimate},
                  {"final_sup_diff", est.sup_diffs.empty() ? 0.0 : est.sup_diffs.back()}};
      all_converged = all_converged && est.converged;
      if (std::isfinite(est.rate_estimate)) rates.push_back(est.rate_estimate);
      if (cfg.pullback.verify && est.converged) {
        c.enter("verify-periodicity x=" + format_double(xv) + " seed=" + std::to_string(seed));
        const auto rep = verify_random_periodicity(est, sys, path, 5.0 * cfg.dt);
        run["periodicity_residual"] = rep.periodicity_residual;
        run["cocycle_residual"] = rep.cocycle_residual;
        run["periodicity_threshold"] = rep.threshold;
        run["periodicity_ok"] = rep.periodicity_ok;
        run["cocycle_ok"] = rep.cocycle_ok;
      }
      if (wdecay && est.converged) {
        c.enter("stability x=" + format_double(xv) + " seed=" + std::to_string(seed));
        std::vector<Vector> deltas{Vector::Constant(N, 1.0), Vector::Constant(N, -1.0)};
        const auto rows = stability_probe(sys, c.x(xv), est, deltas, path, cfg.pullback.stability_periods);
        json slopes = json::array();
        for (const auto& row : rows) {
          for (std::size_t k = 0; k < row.diffs.size(); ++k) {
            *wdecay << xv << static_cast<long long>(seed) << row.perturbation[0]
                    << static_cast<long long>(k) << row.diffs[k];
            wdecay->end_row();
          }
          slopes.push_back(row.slope_per_time);
        }
        run["decay_slopes"] = slopes;
      }
      runs.push_back(run);
    }
  }
  c.results["runs"] = runs;
  c.results["converged"] = all_converged;
  c.results["rate"] = rates.empty() ? std::numeric_limits<double>::quiet_NaN() : mean(rates);
}

// ---------------------------------------------------------------- measure

void cmd_measure(Context& c) {
  const auto& cfg = c.cfg;
  const auto sys = c.system();
  const int N = cfg.fast_dims();
  const double r = c.phase_of(cfg.measure.r, "measure.r") * cfg.dt;
  auto fmom = c.open("measure_moments.csv");
  CsvWriter wmom(fmom, concat(concat({"x", "n", "excluded"}, y_columns("mean_", N)), y_columns("var_", N)));
  json per_x = json::array();
  std::vector<EmpiricalMeasure> sections;
  for (std::size_t i = 0; i < cfg.x_grid.size(); ++i) {
    const double xv = cfg.x_grid[i];
    c.enter("measure x=" + format_double(xv));
    const auto sample = empirical_periodic_measure(sys, c.x(xv), r, cfg.budgets.n_samples, c.sampling());
    {
      auto f = c.open("measure_x" + std::to_string(i) + ".csv");
      write_measure_csv(f, sample.measure);
    }
    json entry = {{"x", xv}, {"n", sample.measure.size()}, {"excluded", sample.excluded}};
    wmom << xv << static_cast<long long>(sample.measure.size()) << static_cast<long long>(sample.excluded);
    json means = json::array();
    json vars = json::array();
    json var_se = json::array();
    std::vector<double> m(static_cast<std::size_t>(N)), v(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
      std::vector<double> col;
      for (const auto& p : sample.measure.support) col.push_back(p.y[k]);
      m[static_cast<std::size_t>(k)] = mean(col);
      v[static_cast<std::size_t>(k)] = sample_variance(col);
      means.push_back(mean(col));
      vars.push_back(sample_variance(col));
      var_se.push_back(variance_standard_error(col));
    }
    for (double q : m) wmom << q;
    for (double q : v) wmom << q;
    wmom.end_row();
    entry["mean"] = means;
    entry["variance"] = vars;
    entry["variance_se"] = var_se;
    if (cfg.system == "toy_turbulence") entry["variance_closed_form"] = cfg.toy.sigma * cfg.toy.sigma / (2.0 * cfg.toy.gamma(xv));
    if (cfg.measure.poincare) {
      c.enter("poincare x=" + format_double(xv));
      PoincareConfig pc;
      pc.hull = HullKind::kSigmaBox;
      pc.base_seed = derive_seed(cfg.seeds.front(), kStreamPoincare, i);
      pc.workers = cfg.workers;
      const auto rep = poincare_section_check(sample.measure, sys, c.x(xv), cfg.dt, pc);
      entry["poincare_fraction"] = rep.fraction;
      entry["poincare_se"] = rep.se;
    }
    per_x.push_back(entry);
    sections.push_back(sample.measure);
  }
  c.enter("bl-table");
  const CylinderMetric metric{cfg.tau};
  BLOptions opts;
  opts.cap = cfg.measure.bl_cap;
  auto fbl = c.open("bl_table.csv");
  CsvWriter wbl(fbl, {"kind", "x_i", "x_j", "d_bl", "ratio", "subsampled"});
  for (std::size_t i = 0; i < sections.size(); ++i) {
    for (std::size_t j = i + 1; j < sections.size(); ++j) {
      const auto bl = bl_distance(sections[i], sections[j], metric, opts);
      const double dx = std::abs(cfg.x_grid[j] - cfg.x_grid[i]);
      wbl << std::string("section") << cfg.x_grid[i] << cfg.x_grid[j] << bl.value << bl.value / dx
          << static_cast<long long>(bl.subsampled);
      wbl.end_row();
    }
  }
  if (cfg.measure.lipschitz && cfg.x_grid.size() > 1) {
    c.enter("lipschitz-probe");
    LipschitzProbeConfig lc;
    lc.n_samples = cfg.budgets.n_samples;
    lc.n_sections = std::min<std::size_t>(cfg.budgets.n_sections, 64);
    lc.sampling = c.sampling();
    lc.bl = opts;
    std::vector<Vector> xs;
    for (double xv : cfg.x_grid) xs.push_back(c.x(xv));
    const auto rows = measure_lipschitz_probe(sys, xs, lc);
    json ratios = json::array();
    for (const auto& row : rows) {
      wbl << std::string("time_averaged") << cfg.x_grid[row.i] << cfg.x_grid[row.j] << row.d_bl
          << row.ratio << static_cast<long long>(row.subsampled);
      wbl.end_row();
      ratios.push_back(row.ratio);
    }
    c.results["lipschitz_ratios"] = ratios;
  }
  c.results["measures"] = per_x;
  c.results["r"] = r;
}

// ---------------------------------------------------------------- ergodicity

void cmd_ergodicity(Context& c) {
  const auto& cfg = c.cfg;
  const auto sys = c.system();
  const int N = cfg.fast_dims();
  const auto& o = cfg.ergodicity;
  const std::int64_t phase = c.phase_of(o.r, "ergodicity.r");
  auto f = c.open("kb_curve.csv");
  CsvWriter w(f, {"x", "box", "m", "value", "se", "inconclusive"});
  json per_x = json::array();
  bool all_within = true;
  for (double xv : cfg.x_grid) {
    c.enter("ergodicity-median x=" + format_double(xv));
    const auto sample =
        empirical_periodic_measure(sys, c.x(xv), phase * cfg.dt, cfg.budgets.n_samples, c.sampling());
    std::vector<double> first;
    for (const auto& p : sample.measure.support) first.push_back(p.y[0]);
    std::nth_element(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(first.size() / 2), first.end());
    const double median = first[first.size() / 2];
    const double inf = std::numeric_limits<double>::infinity();
    CylinderBox half{Vector::Constant(N, -inf), Vector::Constant(N, inf)};
    half.y_hi[0] = median;
    const CylinderBox full{Vector::Constant(N, -inf), Vector::Constant(N, inf)};

    c.enter("ergodicity x=" + format_double(xv));
    KrylovConfig kc;
    kc.section_phase = phase;
    kc.n_start = o.n_start;
    kc.n_inner = o.n_inner;
    kc.n_measure = o.n_measure;
    kc.n_sections = std::min<std::size_t>(cfg.budgets.n_sections, 64);
    kc.sampling = c.sampling();
    const auto curves = krylov_bogolyubov_curve(sys, c.x(xv), {half, full}, o.m_max, kc);
    const char* names[] = {"median_half_space", "full"};
    json entry = {{"x", xv}, {"median", median}};
    for (std::size_t b = 0; b < curves.size(); ++b) {
      const auto& cv = curves[b];
      for (std::size_t m = 0; m < cv.value.size(); ++m) {
        w << xv << std::string(names[b]) << static_cast<long long>(m + 1) << cv.value[m] << cv.se[m]
          << static_cast<long long>(cv.inconclusive[m]);
        w.end_row();
      }
      const bool within = cv.value.back() <= 3.0 * cv.se.back();
      all_within = all_within && within;
      entry[names[b]] = {{"mu_r", cv.mu_r},
                         {"mu_r_se", cv.mu_r_se},
                         {"final_value", cv.value.back()},
                         {"final_se", cv.se.back()},
                         {"within_3se", within}};
    }
    per_x.push_back(entry);
  }
  c.results["curves"] = per_x;
  c.results["all_within_3se"] = all_within;
}

// ---------------------------------------------------------------- diagnose

void cmd_diagnose(Context& c) {
  const auto& cfg = c.cfg;
  const auto sys = c.system();
  const int N = cfg.fast_dims();
  const auto& o = cfg.diagnose;
  const Vector y0 = c.vec_or(o.y0, 1.0);
  const Vector z0 = c.vec_or(o.z0, -1.0);
  auto flam = c.open("coupling_lambda.csv");
  auto fdis = c.open("dissipativity.csv");
  auto fsg = c.open("semigroup.csv");
  CsvWriter wlam(flam, {"x", "t", "lambda"});
  CsvWriter wdis(fdis, {"x", "t", "K", "L", "lambda"});
  CsvWriter wsg(fsg, {"x", "distance", "ratio", "se", "inconclusive"});
  json per_x = json::array();
  for (std::size_t i = 0; i < cfg.x_grid.size(); ++i) {
    const double xv = cfg.x_grid[i];
    json entry = {{"x", xv}};
    c.enter("coupling x=" + format_double(xv));
    const auto path = make_path(cfg.seeds.front(), cfg.dt, sys.noise_dims());
    const auto rep = coupling_rate(sys, c.x(xv), y0, z0, squared_norm_lyapunov(), path, o.T);
    for (const auto& [t, l] : rep.lambda_samples) {
      wlam << xv << t << l;
      wlam.end_row();
    }
    entry["coupling"] = {{"beta_hat", rep.beta_hat},
                         {"converged", rep.converged},
                         {"truncated", rep.truncated},
                         {"horizon", rep.horizon}};

    c.enter("dissipativity x=" + format_double(xv));
    const SampleBox box{Vector::Constant(N, o.box_lo), Vector::Constant(N, o.box_hi)};
    const auto tab = dissipativity_constants(sys, c.x(xv), box, o.n_pairs, 16, 2.0,
                                             derive_seed(cfg.seeds.front(), 10, i));
    for (std::size_t k = 0; k < tab.t_grid.size(); ++k) {
      wdis << xv << tab.t_grid[k] << tab.K[k] << tab.L[k] << tab.lambda[k];
      wdis.end_row();
    }
    entry["dissipativity"] = {{"K_min", *std::min_element(tab.K.begin(), tab.K.end())},
                              {"L_max", *std::max_element(tab.L.begin(), tab.L.end())},
                              {"lambda_max", *std::max_element(tab.lambda.begin(), tab.lambda.end())}};

    c.enter("hormander x=" + format_double(xv));
    const auto rank = hormander_rank(sigma_columns(sys, c.x(xv)), 0.0, y0, o.max_level);
    entry["hormander"] = {{"rank", rank.rank}, {"level", rank.level}, {"N", N}};

    c.enter("semigroup x=" + format_double(xv));
    SemigroupProbeConfig sc;
    sc.n_paths = o.n_paths;
    sc.dt = cfg.dt;
    sc.base_seed = derive_seed(cfg.seeds.front(), kStreamSemigroup, i);
    sc.workers = cfg.workers;
    const auto phi = [](const Vector& y) { return std::clamp(y[0], -10.0, 10.0); };
    std::vector<std::pair<LiftedState, LiftedState>> pairs;
    for (double d : {0.1, 0.01}) {
      Vector z = y0;
      z[0] += d;
      pairs.emplace_back(make_lifted(0, cfg.dt, y0), make_lifted(0, cfg.dt, z));
    }
    const auto rows = semigroup_continuity_probe(sys, c.x(xv), phi, pairs, o.probe_t, sc);
    json sg = json::array();
    for (const auto& row : rows) {
      wsg << xv << row.distance << row.ratio << row.se << static_cast<long long>(row.inconclusive);
      wsg.end_row();
      sg.push_back({{"distance", row.distance}, {"ratio", row.ratio}, {"se", row.se}});
    }
    entry["semigroup"] = sg;
    per_x.push_back(entry);
  }
  c.results["diagnostics"] = per_x;
}

// ---------------------------------------------------------------- average

void cmd_average(Context& c) {
  const auto& cfg = c.cfg;
  const auto sys = c.system();
  const auto budgets = drift_budgets(c);
  auto f = c.open("drift_table.csv");
  CsvWriter w(f, {"method", "x", "fbar", "se"});
  json tables = json::object();
  std::vector<AveragedDriftTable> built;
  for (const auto& m : cfg.average.methods) {
    c.enter("drift-table " + m);
    auto tab = build_drift_table(sys, {cfg.x_grid}, parse_method(m), budgets);
    json vals = json::array();
    json ses = json::array();
    for (std::size_t i = 0; i < tab.size(); ++i) {
      w << m << cfg.x_grid[i] << tab.values[i][0] << tab.se[i][0];
      w.end_row();
      vals.push_back(tab.values[i][0]);
      ses.push_back(tab.se[i][0]);
    }
    tables[m] = {{"values", vals}, {"se", ses}};
    built.push_back(std::move(tab));
  }
  c.results["tables"] = tables;
  if (cfg.system == "toy_turbulence") {
    json v2 = json::array();
    for (double xv : cfg.x_grid)
      v2.push_back({{"x", xv},
                    {"v2_quadrature", toy_v2_integral(xv, cfg.toy)},
                    {"v2_alt_form", toy_v2_integral_alt_form(xv, cfg.toy)}});
    c.results["v2_integral"] = v2;
  }
  if (cfg.average.ode) {
    if (cfg.x_grid.size() < 2) {
      c.results["ode_skipped"] = "x_grid needs at least two points for interpolation";
      return;
    }
    c.enter("averaged-ode");
    auto fo = c.open("averaged_ode.csv");
    CsvWriter wo(fo, {"method", "epsilon", "t", "x"});
    json finals = json::array();
    for (std::size_t k = 0; k < built.size(); ++k) {
      for (double eps : cfg.epsilons) {
        const auto traj = solve_averaged_ode(built[k], c.x(cfg.average.ode_x0), eps, cfg.budgets.T, cfg.dt);
        const std::size_t stride = std::max<std::size_t>(1, traj.states.size() / 1000);
        for (std::size_t j = 0; j < traj.states.size(); j += stride) {
          wo << cfg.average.methods[k] << eps << traj.time(j) << traj.states[j][0];
          wo.end_row();
        }
        finals.push_back({{"method", cfg.average.methods[k]}, {"epsilon", eps}, {"x_final", traj.states.back()[0]}});
      }
    }
    c.results["ode"] = finals;
  }
}

// ---------------------------------------------------------------- verify-averaging

struct StudyOutcome {
  AveragingStudy study;
  bool strictly_decreasing = true;
  std::string fbar;
};

StudyOutcome run_study(Context& c) {
  const auto& cfg = c.cfg;
  const auto sys = c.system();
  StudyOutcome out;
  std::string kind = cfg.verify.fbar;
  if (kind == "auto") kind = cfg.system == "toy_turbulence" ? "closed_form" : "ergodic";
  out.fbar = kind;
  AveragedField fbar;
  if (kind == "closed_form") {
    fbar = toy_fbar(cfg.toy);
  } else {
    c.enter("verify-averaging drift-table " + kind);
    if (cfg.x_grid.size() < 2) throw InvalidArgument("a tabulated drift needs at least two x_grid points");
    fbar = build_drift_table(sys, {cfg.x_grid}, parse_method(kind), drift_budgets(c)).as_field();
  }
  std::vector<double> eps = cfg.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  std::vector<Vector> xs;
  for (double xv : cfg.x_grid) xs.push_back(c.x(xv));
  StudyConfig sc;
  sc.dt = cfg.dt;
  sc.base_seed = cfg.seeds.front();
  sc.pullback = c.pullback();
  sc.n_sections = cfg.budgets.n_sections;
  sc.workers = cfg.workers;
  c.enter("verify-averaging study");
  out.study = averaging_error_study(sys, xs, eps, cfg.budgets.T, cfg.budgets.n_mc, fbar, sc);
  out.strictly_decreasing = out.study.strictly_decreasing;
  return out;
}

void write_study(Context& c, const StudyOutcome& o) {
  auto f = c.open("error_study.csv");
  auto fr = c.open("error_runs.csv");
  auto fb = c.open("block_discrepancy.csv");
  CsvWriter w(f, {"epsilon", "n_blocks", "t_eps", "n_mc", "mean_sup_error", "se"});
  CsvWriter wr(fr, {"epsilon", "run", "sup_error"});
  CsvWriter wb(fb, {"epsilon", "block", "discrepancy"});
  json rows = json::array();
  for (const auto& r : o.study.reports) {
    w << r.epsilon << static_cast<long long>(r.partition.n) << r.partition.t_eps
      << static_cast<long long>(r.n_mc) << r.mean << r.se;
    w.end_row();
    for (std::size_t i = 0; i < r.errors.size(); ++i) {
      wr << r.epsilon << static_cast<long long>(i) << r.errors[i];
      wr.end_row();
    }
    for (std::size_t j = 0; j < r.block_discrepancy.size(); ++j) {
      wb << r.epsilon << static_cast<long long>(j) << r.block_discrepancy[j];
      wb.end_row();
    }
    rows.push_back({{"epsilon", r.epsilon},
                    {"n_blocks", r.partition.n},
                    {"mean_sup_error", r.mean},
                    {"se", r.se}});
  }
  c.results["fbar"] = o.fbar;
  c.results["errors"] = rows;
  json gaps = json::array();
  for (std::size_t k = 0; k < o.study.gap.size(); ++k) {
    const auto& a = o.study.reports[k];
    const auto& b = o.study.reports[k + 1];
    gaps.push_back({{"from", a.epsilon},
                    {"to", b.epsilon},
                    {"gap", o.study.gap[k]},
                    {"paired_se", o.study.gap_se[k]},
                    {"combined_se", std::hypot(a.se, b.se)}});
  }
  c.results["gaps"] = gaps;
  c.results["monotone"] = o.study.monotone;
  c.results["strictly_decreasing"] = o.strictly_decreasing;
}

int cmd_verify(Context& c) {
  const auto o = run_study(c);
  write_study(c, o);
  return o.strictly_decreasing ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- example

struct Check {
  std::string name;
  double value;
  double threshold;
  bool pass;
};

int cmd_example(Context& c) {
  const auto& cfg = c.cfg;
  const auto sys = c.system();
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double threshold, bool pass) {
    c.log << (pass ? "PASS " : "FAIL ") << name << " value=" << format_double(value)
          << " threshold=" << format_double(threshold) << "\n";
    checks.push_back({std::move(name), value, threshold, pass});
  };
  const Vector x0 = c.x(cfg.x_grid.front());
  const auto path = make_path(cfg.seeds.front(), cfg.dt, sys.noise_dims());

  c.enter("example pullback");
  PullbackConfig pc = c.pullback();
  const auto est = pullback_solve(sys, x0, path, pc);
  add("pullback_converged", est.k_used, cfg.budgets.k_max, est.converged);
  add("pullback_rate_negative", est.rate_estimate, 0.0, est.rate_estimate < 0.0);
  if (est.converged) {
    c.enter("example periodicity");
    const auto rep = verify_random_periodicity(est, sys, path, 5.0 * cfg.dt);
    const double thr = 2.0 * (cfg.budgets.tol + 5.0 * cfg.dt);
    add("random_periodicity", rep.periodicity_residual, thr, rep.periodicity_residual <= thr);
    add("cocycle_bit_exact", rep.cocycle_residual, 0.0, rep.cocycle_residual == 0.0);
  }

  if (cfg.system == "ou_periodic") {
    c.enter("example oracle");
    const auto& p = cfg.ou;
    auto pa = p;
    pa.tau = cfg.tau;
    const auto alpha = [pa](double t) { return pa.alpha(t); };
    const auto beta = [pa](double t) { return pa.beta(t); };
    double err = 0.0;
    double trunc = 0.0;
    for (std::size_t j = 0; j < est.values.size(); ++j) {
      const auto o = ou_random_periodic_oracle(alpha, beta, p.sigma, path, est.r_grid[j], 20, cfg.tau);
      err = std::max(err, std::abs(o.value - est.values[j].y[0]));
      trunc = std::max(trunc, o.truncation_bound);
    }
    const double thr = std::max(5.0 * cfg.dt, cfg.budgets.tol) + trunc;
    add("oracle_sup_error", err, thr, err <= thr);

    c.enter("example coupling");
    const auto cr = coupling_rate(sys, x0, Vector::Constant(1, 1.0), Vector::Constant(1, -1.0),
                                  squared_norm_lyapunov(), path, 10.0 * cfg.tau);
    const double target = -p.a0;
    add("coupling_rate", cr.beta_hat, target, std::abs(cr.beta_hat - target) <= 0.15 * std::abs(target));

    c.enter("example ergodicity");
    const auto sample = empirical_periodic_measure(sys, x0, 0.0, cfg.budgets.n_samples, c.sampling());
    std::vector<double> ys;
    for (const auto& a : sample.measure.support) ys.push_back(a.y[0]);
    std::nth_element(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(ys.size() / 2), ys.end());
    const double inf = std::numeric_limits<double>::infinity();
    CylinderBox half{Vector::Constant(1, -inf), Vector::Constant(1, ys[ys.size() / 2])};
    KrylovConfig kc;
    kc.n_start = cfg.ergodicity.n_start;
    kc.n_inner = cfg.ergodicity.n_inner;
    kc.n_measure = cfg.ergodicity.n_measure;
    kc.n_sections = std::min<std::size_t>(cfg.budgets.n_sections, 64);
    kc.sampling = c.sampling();
    const auto cv = krylov_bogolyubov_curve(sys, x0, {half}, cfg.ergodicity.m_max, kc).front();
    add("krylov_bogolyubov_final", cv.value.back(), 3.0 * cv.se.back(), cv.value.back() <= 3.0 * cv.se.back());
  } else if (cfg.system == "toy_turbulence") {
    const auto& p = cfg.toy;
    c.enter("example variance");
    const auto sample = empirical_periodic_measure(sys, x0, 0.0, cfg.budgets.n_samples, c.sampling());
    std::vector<double> ys;
    for (const auto& a : sample.measure.support) ys.push_back(a.y[0]);
    const double var = sample_variance(ys);
    const double target = p.sigma * p.sigma / (2.0 * p.gamma(x0[0]));
    const double se = variance_standard_error(ys);
    add("fast_marginal_variance", var, target, std::abs(var - target) <= 3.0 * se);

    const auto budgets = drift_budgets(c);
    c.enter("example drift ergodic");
    const auto te = build_drift_table(sys, {cfg.x_grid}, DriftMethod::kErgodic, budgets);
    c.enter("example drift measure");
    const auto tm = build_drift_table(sys, {cfg.x_grid}, DriftMethod::kMeasure, budgets);
    for (std::size_t i = 0; i < cfg.x_grid.size(); ++i) {
      const double xv = cfg.x_grid[i];
      const double fe = te.values[i][0];
      const double fm = tm.values[i][0];
      const double fc = toy_averaged_drift(xv, p);
      const double sc = std::hypot(te.se[i][0], tm.se[i][0]);
      const std::string tag = "x=" + format_double(xv);
      add("drift_routes_agree " + tag, std::abs(fe - fm), 3.0 * sc, std::abs(fe - fm) <= 3.0 * sc);
      add("drift_ergodic_vs_closed " + tag, std::abs(fe - fc), 3.0 * te.se[i][0],
          std::abs(fe - fc) <= 3.0 * te.se[i][0]);
      add("drift_measure_vs_closed " + tag, std::abs(fm - fc), 3.0 * tm.se[i][0],
          std::abs(fm - fc) <= 3.0 * tm.se[i][0]);
    }

    c.enter("example partition");
    add("partition_n_eps_0.1", hasminskii_partition(0.1, 1.0).n, 9, hasminskii_partition(0.1, 1.0).n == 9);
    add("partition_n_eps_0.01", hasminskii_partition(0.01, 1.0).n, 69, hasminskii_partition(0.01, 1.0).n == 69);

    c.enter("example study");
    const auto o = run_study(c);
    write_study(c, o);
    add("averaging_error_strictly_decreasing", o.study.reports.back().mean, o.study.reports.front().mean,
        o.strictly_decreasing);
  }

  auto f = c.open("example_checks.csv");
  CsvWriter w(f, {"check", "value", "threshold", "pass"});
  bool ok = true;
  json arr = json::array();
  for (const auto& ch : checks) {
    w << ch.name << ch.value << ch.threshold << static_cast<long long>(ch.pass);
    w.end_row();
    ok = ok && ch.pass;
    arr.push_back({{"check", ch.name}, {"value", ch.value}, {"threshold", ch.threshold}, {"pass", ch.pass}});
  }
  c.results["checks"] = arr;
  c.results["all_passed"] = ok;
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "pullback", "measure", "ergodicity",
                                              "diagnose", "average", "verify-averaging", "example"};
  return names;
}

int run(const std::string& command, const ExperimentConfig& cfg, std::uint64_t seed_offset,
        std::ostream& log, std::ostream& err) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    err << "error: unknown command '" << command << "'\n";
    return kExitUsage;
  }
  Context c{cfg, log, fs::path(cfg.output)};
  int status = kExitOk;
  try {
    fs::create_directories(c.out);
    if (command == "simulate") cmd_simulate(c);
    else if (command == "pullback") cmd_pullback(c);
    else if (command == "measure") cmd_measure(c);
    else if (command == "ergodicity") cmd_ergodicity(c);
    else if (command == "diagnose") cmd_diagnose(c);
    else if (command == "average") cmd_average(c);
    else if (command == "verify-averaging") status = cmd_verify(c);
    else status = cmd_example(c);
  } catch (const NumericalBlowup& e) {
    err << "error: stage '" << c.stage << "' failed: " << e.what() << " (t = " << format_double(e.time())
        << ")\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: stage '" << c.stage << "' failed: " << e.what() << "\n";
    return kExitNumerical;
  }
  json summary;
  summary["command"] = command;
  summary["version"] = std::string(kVersion);
  summary["config"] = cfg.to_json();
  summary["seeds"] = cfg.seeds;
  summary["seed_offset"] = seed_offset;
  summary["status"] = status;
  summary["results"] = c.results;
  std::string file = command + "_summary.json";
  std::replace(file.begin(), file.end(), '-', '_');
  std::ofstream f(c.out / file, std::ios::binary);
  f << summary.dump(2) << "\n";
  if (!f) {
    err << "error: cannot write " << (c.out / file).string() << "\n";
    return kExitNumerical;
  }
  return status;
}

}  // namespace rpavg::cli

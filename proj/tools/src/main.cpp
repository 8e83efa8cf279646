#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rpavg/version.hpp"
#include "rpavg_cli/config.hpp"
#include "rpavg_cli/runner.hpp"

int main(int argc, char** argv) {
  using namespace rpavg::cli;
  CLI::App app{"Random periodic solutions and averaging for slow-fast SDEs"};
  app.set_version_flag("--version", std::string(rpavg::kVersion));

  std::string command;
  std::string config_path;
  std::string out_dir;
  int workers = -1;
  std::uint64_t seed_offset = 0;
  bool quiet = false;

  app.add_option("command", command, "simulate | pullback | measure | ergodicity | diagnose | average | verify-averaging | example")
      ->required()
      ->check(CLI::IsMember(command_names()));
  app.add_option("--config", config_path, "experiment file")->required();
  app.add_option("--out", out_dir, "output directory (overrides experiment.output)");
  app.add_option("--workers", workers, "worker threads, 0 = all cores (overrides experiment.workers)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed-offset", seed_offset, "added to every seed");
  app.add_flag("-q,--quiet", quiet, "suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!out_dir.empty()) cfg.output = out_dir;
  if (workers >= 0) cfg.workers = static_cast<unsigned>(workers);
  cfg.offset_seeds(seed_offset);

  std::ostream null_stream(nullptr);
  return run(command, cfg, seed_offset, quiet ? null_stream : std::cerr, std::cerr);
}

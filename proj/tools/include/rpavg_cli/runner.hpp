#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "rpavg_cli/config.hpp"

namespace rpavg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // a verification command ran but its check did not hold
  kExitUsage = 2,        // bad flags or invalid configuration
  kExitNumerical = 3,    // a numerical stage failed
};

const std::vector<std::string>& command_names();

// Runs one subcommand. Artifacts go to cfg.output; progress to `log`,
// failures to `err`. seed_offset is only echoed, cfg.seeds already include it.
int run(const std::string& command, const ExperimentConfig& cfg, std::uint64_t seed_offset,
        std::ostream& log, std::ostream& err);

}  // namespace rpavg::cli

#pragma once

#include <string>

#include "delaystab/config.hpp"

namespace delaystab::io_cli {

struct CommandOptions {
  std::string out_dir;      // overrides the config's output directory
  int n_max = 0;            // overrides certification.n_max when > 0
  std::string seed_grid;    // "COARSE" (default density) or "FINE"
};

/// Exit codes: 0 success, 2 infeasible certification, 1 any error (thrown).
int cmd_design(RunConfig config, const CommandOptions& options);
int cmd_certify(RunConfig config, const CommandOptions& options);
int cmd_simulate(RunConfig config, const CommandOptions& options);
int cmd_sweep(RunConfig config, const CommandOptions& options);
int cmd_export_lmi(RunConfig config, const CommandOptions& options);
int cmd_reproduce_paper(RunConfig config, const CommandOptions& options);

int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& options);

}  // namespace delaystab::io_cli

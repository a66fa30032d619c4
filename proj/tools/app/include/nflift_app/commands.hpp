// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nflift/error.hpp"
#include "nflift_app/run_config.hpp"

namespace nflift::app {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,     // bad command line or internal error
  kExitConfig = 2,    // invalid configuration or input document
  kExitSolver = 3,    // solver did not converge or a numerical stage failed
  kExitIo = 4,        // file could not be read or written
};

int exit_code_for(ErrorKind kind);

struct CommandContext {
  RunConfig config;
  std::filesystem::path out_dir;
  std::string command;
  std::ostream* log = nullptr;  // progress lines when verbosity > 0
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;  // written, relative to out_dir
  std::string summary;             // one line for the terminal
};

/// Each command writes config.json (the resolved config) first, then its
/// artifacts. Library errors propagate as nflift::Error.
CommandResult cmd_validate_lifting(const CommandContext& ctx);
CommandResult cmd_simulate(const CommandContext& ctx);
CommandResult cmd_estimate(const CommandContext& ctx);
CommandResult cmd_experiment(const CommandContext& ctx);

/// Dispatch by name; unknown names are a config error.
CommandResult run_command(const CommandContext& ctx);

/// Rows of the validate-lifting sweep in output order (range, then truncation
/// pair, then antenna).
struct SweepRow {
  double range = 0.0;
  int antenna = 0;
  int i1 = 0;
  int i2 = 0;
  double abs_delta_fresnel = 0.0;
  double abs_delta_tail = 0.0;
  double tail_bound = 0.0;
};

std::vector<SweepRow> lifting_sweep(const RunConfig& cfg);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// CSV "kind,bin,range_m,angle_rad,gain_re,gain_im,gain_abs" with kind = true | estimated.
void write_amplitudes_csv(std::ostream& out, const std::vector<PathSpec>& truth, const SupportEstimate& support,
                          const GainEstimate& gains, const LiftingConfig& lifting);

}  // namespace nflift::app

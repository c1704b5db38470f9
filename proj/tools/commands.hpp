#pragma once

// Subcommands of the `nio` tool. Each writes its artefacts into the output
// directory and returns a process exit code.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace nio::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitNumerical = 2,
    kExitHypothesis = 3,
};

struct CommandContext {
    std::filesystem::path out_dir = ".";
    /// Also dump trajectories (periodic orbits, M/K curves) as CSV.
    bool trace = false;
    std::ostream* log = nullptr;
};

int cmd_pbar(const RunConfig& config, const CommandContext& ctx);
int cmd_analyze(const RunConfig& config, const CommandContext& ctx);
int cmd_simulate(const RunConfig& config, const CommandContext& ctx);
int cmd_fixed_point(const RunConfig& config, const CommandContext& ctx);
int cmd_converge(const RunConfig& config, const CommandContext& ctx);

/// Shortest representation that parses back to the same double; locale
/// independent.
std::string format_double(double value);

/// Full command line (args[0] is the program name). Errors are reported on
/// `err` and mapped to exit codes.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nio::cli

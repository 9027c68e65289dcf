#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace tfh::cli {

/// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

/// Executes one subcommand. Human-readable progress goes to `out`; on failure
/// a single-line error JSON goes to `err`.
int run(Command command, const RunConfig& config, std::ostream& out, std::ostream& err);

/// Full command-line entry point: flag parsing, config loading, validation and
/// dispatch. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tfh::cli

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "birthsim/run_config.hpp"

namespace birthsim {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

// BIRTHSIM_OUT_DIR if set, otherwise "out".
std::string default_output_dir();
std::string resolve_output_dir(const RunConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

// Writes one JSONL log per replica and prints a summary per log.
int cmd_simulate(const RunConfig& config, const std::string& out_path, std::ostream& out, std::ostream& err);

// Closed-form suite; prints a JSON report. Exit 0 iff every tolerance holds.
int cmd_verify(std::ostream& out, int grid_size = 256);

// Writes the figure's CSV bundle and README under <output_dir>/<figure>/.
int cmd_reproduce(const std::string& figure, const RunConfig& config, std::ostream& out, std::ostream& err);

// Full command line (argv[0] is the program name).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace birthsim

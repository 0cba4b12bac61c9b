#pragma once

// Subcommand orchestration behind the `nisio` command-line tool. Every
// command writes report.json (and CSV sidecars) into the output directory
// and echoes the report on stdout. Failures print a JSON error object on
// stderr and map to exit code 1 (input) or 2 (numerical).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nisio/config.hpp"

namespace nisio {

struct RunFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> n;
  std::optional<std::string> f;  ///< bounds test function: ones | phi | expression
  bool echo = true;              ///< print report.json on stdout
};

const std::vector<std::string>& command_names();

/// Runs one command on an already loaded config.
int run(const std::string& command, Config cfg, const RunFlags& flags, std::ostream& out,
        std::ostream& err);

/// Loads the config, then runs; load errors are reported like command errors.
int run_file(const std::string& command, const std::string& config_path, const RunFlags& flags,
             std::ostream& out, std::ostream& err);

/// {"error": kind, "message": ..., "exit_code": ...[, "line": ...]} as text.
std::string error_json(const std::exception& e, int exit_code);

}  // namespace nisio

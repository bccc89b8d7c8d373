#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tdbsde_cli/config.hpp"

namespace tdbsde::cli {

enum ExitCode : int {
  kExitPass = 0,
  kExitError = 1,
  kExitConfig = 2,
  kExitZeroSolution = 3,
  kExitNonConvergence = 4,
  kExitVerification = 5,
  kExitConstruction = 6,
  kExitBudget = 7,
};

const std::vector<std::string>& subcommands();

int exit_code_for(const std::exception& e);

// Runs one subcommand and writes report.json, paths.csv (when the subcommand
// produces paths) and manifest.json under `out`. Prints a one-line summary to
// `log`. Never throws for module errors: they are recorded in a partial
// report and mapped to the exit code.
int dispatch(const RunConfig& config, const std::string& subcommand, const std::filesystem::path& out, bool force,
             std::ostream& log);

std::string sha256_hex(const std::string& data);

}  // namespace tdbsde::cli

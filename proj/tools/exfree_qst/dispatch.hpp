#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace exfree::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitRegime = 3,
  kExitNonConvergence = 4
};

// Everything one run writes, keyed by path relative to the label directory.
struct Artifacts {
  std::map<std::string, std::string> files;
  std::string summary_text;  // printed to stdout
};

Artifacts run_experiment(const RunConfig& config);

// Deterministic part of the manifest: config echo, resolved parameters,
// library versions, warnings.
nlohmann::json build_manifest(const RunConfig& config);

// Writes into <out>/<experiment>/<label>/ via a staging directory that is
// renamed once every file is on disk. Returns the final directory.
std::filesystem::path write_artifacts(const Artifacts& artifacts, const RunConfig& config,
                                      const std::filesystem::path& out_root, const std::string& command_line);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace exfree::cli

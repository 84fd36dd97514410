#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "hslift/config.hpp"

namespace hslift::cli {

enum ExitCode : int { kPass = 0, kVerdictFailure = 1, kConfigError = 2, kNumericalGuard = 3 };

struct Command {
  std::string name;
  std::string help;
  /// Keys the command reads; also exposed as --key flags.
  std::set<std::string> keys;
  /// Fills defaults that depend on other keys, then validates.
  void (*prepare)(Config&);
  int (*run)(const Config&, const std::filesystem::path& out, std::ostream& log);
};

const std::vector<Command>& commands();

/// Keys every command accepts.
const std::set<std::string>& common_keys();

/// Output directory: --out, else the output_dir key, else $HSLIFT_OUTPUT_DIR,
/// else ".".
std::filesystem::path resolve_output_dir(const std::string& flag, const std::string& config_value);

/// Runs a command with the exception-to-exit-code mapping of the CLI.
/// output_dir and threads are taken out of `config` first, so they never
/// reach the config hash.
int dispatch(const Command& cmd, Config config, const std::string& out_flag, std::ostream& log, std::ostream& err);

}  // namespace hslift::cli

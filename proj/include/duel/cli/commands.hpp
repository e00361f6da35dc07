#pragma once

#include "duel/cli/config.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace duel::cli {

// Stable process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailure = 1,
  kExitConfigError = 2,
  kExitDivergence = 3,
  kExitRuntimeError = 4,  // I/O and other unexpected failures
};

/// Command-line sources of configuration, applied in this order on top of
/// the built-in defaults: config file, --set overrides, dedicated flags.
struct ConfigSources {
  std::optional<std::string> config_path;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> policy;
  std::optional<std::string> score;
  std::optional<double> bias_factor;
};

/// Throws ConfigError.
RunConfig resolve_config(const ConfigSources& sources);

/// One run per (policy, bias, seed) grid cell: `<policy>_<bias>x_<seed>.csv`,
/// optional eviction logs and SVG plots, config.yaml and manifest.json.
int cmd_simulate(const RunConfig& cfg, std::ostream& log);

/// kind is "gradients", "safety" or "threshold". Writes report.json listing
/// each check with its tolerance and measured value.
int cmd_verify(std::string_view kind, const RunConfig& cfg, std::ostream& log);

/// Incremental vs full-recompute duplicate-count maintenance throughput.
int cmd_bench(const RunConfig& cfg, std::ostream& log);

/// One SVG per metric column, one series per input CSV.
int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& out_dir,
             std::ostream& log);

/// Full command line entry point; never throws.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace duel::cli

#pragma once

// Subcommands behind the bilens executable. Each returns the process exit
// status: 0 success, 2 completed but not converged (solve) or a gated check
// failed (validate), 1 error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bilens/scenarios.hpp"

namespace bilens {

struct RunConfig {
  std::optional<std::string> scenario;
  std::optional<std::string> problem_file;
  std::optional<int> grid;
  std::optional<int> max_iters;
  std::optional<double> tol;
  std::optional<StopRule> stop_rule;
  double alpha = 0.0;
  std::optional<int> q;
  std::optional<double> r_scale;
  bool diagnostics = false;
  int mc_paths = 0;
  std::uint64_t seed = 0;
  /// Empty selects <output root>/<source name>.
  std::string out_dir;

  /// Exactly one source.
  void validate() const;
};

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "BILENS_OUTPUT_ROOT";

/// Monte Carlo statistics below this many paths are reported but not gated.
inline constexpr int kMinGatedPaths = 100;
inline constexpr double kMcThreshold = 4.0;
inline constexpr double kFixedPointThreshold = 1e-4;

/// Scenario with all overrides from the config applied.
Scenario resolve_source(const RunConfig& config);

/// Directory the command writes to.
std::string output_dir(const RunConfig& config, const std::string& suffix = "");

int cmd_solve(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Reads control.csv (and state_<j>.csv when present) from the output
/// directory. Without a source in `config`, the source recorded in
/// summary.json is reused.
int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Scales are absolute: R becomes s R0 / (tr R0 / m).
int cmd_sweep_R(const RunConfig& config, const std::vector<double>& scales, std::ostream& out,
                std::ostream& err);

}  // namespace bilens

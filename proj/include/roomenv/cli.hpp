#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace roomenv::cli {

// Effective settings of one command run. Precedence: command-line flags,
// then the --config JSON file, then these defaults.
struct Config {
  double rho = 0.02;
  std::optional<double> tau;  // defaults to 2 * rho
  double eps_vis = 0.05;
  int splat_radius = 0;
  double kappa = 15.0;
  std::size_t n_kernels = 5000;
  std::size_t n_eval = 5000;
  std::vector<double> f_thresholds{0.1, 0.05};
  std::uint64_t seed = 0;
  std::map<std::string, std::uint16_t> layout_classes{
      {"wall", 1}, {"floor", 2}, {"ceiling", 22}, {"door", 8}, {"window", 9}};
  int threads = 1;
  std::string chamfer = "bidirectional";  // or "best-one-directional"
  std::string ply_format = "binary";      // or "ascii"

  double effective_tau() const { return tau.value_or(2.0 * rho); }
  /// Throws Error(InvalidArgument) for out-of-range values.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// Overlays the fields present in `j`; unknown keys are rejected.
  void merge_json(const nlohmann::json& j);
};

enum ExitCode : int { kSuccess = 0, kValidationError = 1, kIoError = 2 };

/// Parses argv and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace roomenv::cli

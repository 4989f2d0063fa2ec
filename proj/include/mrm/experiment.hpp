#pragma once

// Command dispatch for the experiment runner. Each command writes CSV
// tables (and optional summaries and binary dumps) into one output
// directory together with manifest.txt.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrm/config.hpp"

namespace mrm {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2 };

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
};

const std::vector<std::string>& command_names();

/// Command-specific requirements on top of parse_config; throws ConfigError.
void validate_for_command(const ExperimentConfig& cfg, const std::string& command);

struct RunResult {
    int exit_code = kExitOk;
    std::string out_dir;
    std::vector<std::string> files;  ///< relative to out_dir, manifest last
    std::vector<std::string> errors;
};

/// Runs `command`. Validation problems give exit code 1 (nothing written),
/// numerical failures exit code 2 with a manifest marked status = failed.
/// Diagnostics go to `log`.
RunResult run_command(const std::string& command, ExperimentConfig cfg, const RunOverrides& overrides,
                      std::ostream& log);

}  // namespace mrm

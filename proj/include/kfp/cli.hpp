#pragma once

#include "kfp/config.hpp"

#include <string>
#include <vector>

namespace kfp {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kSummarySchemaVersion = 1;

struct RunOptions {
    std::string out_dir;  // overrides config.output_dir when nonempty
    int threads = 0;      // 0 = hardware default (scan parallelism)
    bool verbose = false;
};

struct RunResult {
    int exit_code = 0;  // 0 success, 1 validation failure, 2 numerical failure
    std::vector<std::string> artifacts;
    std::string summary_path;  // summary.json on success, error.json on failure
};

// The eight experiment drivers, in help order.
const std::vector<std::string>& command_names();

// Executes one experiment: writes CSV tables, gnuplot mirrors, and a JSON
// summary into the output directory; deterministic given config (fixed
// iteration orders, no time-seeded randomness).  Failures are reported as a
// machine-readable error.json plus the matching exit code.
RunResult run_command(const std::string& command, const RunConfig& config,
                      const RunOptions& opt = {});

// Same, but loads the config file first (empty path = built-in defaults) so
// that malformed configs also land in error.json with exit code 1.
RunResult run_from_files(const std::string& command, const std::string& config_path,
                         const RunOptions& opt = {});

} // namespace kfp

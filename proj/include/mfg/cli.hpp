#pragma once

// Command implementations behind the `mfg` executable. Each returns the process exit status
// and writes human-readable output to `out`, diagnostics (one line) to `err`.
//
// Exit codes: 0 success; 1 error (bad input, missing file, divergence); 2 `run` finished
// without converging (results are still written); 3 `verify` or `oracle` ran but a check
// exceeded its threshold.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mfg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitCheckFailed = 3;

struct OracleOptions {
    int states = 20;        // EV lattice size; PHEV uses min(states, 10) per axis
    int agents = 100000;
    std::uint64_t seed = 1;
    int stride = 0;         // fine time intervals per DP decision step; 0 picks 16 (EV) or 1 (PHEV)
    double action_step = 0.002;
};

int cmd_run(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
            const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err);
int cmd_verify(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);
int cmd_oracle(const std::filesystem::path& run_dir, const OracleOptions& options, std::ostream& out,
               std::ostream& err);
int cmd_schema(std::ostream& out);

/// Parses argv and dispatches.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mfg::cli

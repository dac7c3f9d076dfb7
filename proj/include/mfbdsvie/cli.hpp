#pragma once
// Batch front end. Exit codes: 0 every check passed, 1 input error, 2 a check
// failed. All outputs are written under out_dir as CSV plus summary.txt.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfbdsvie {

inline constexpr int kExitPass = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitCheck = 2;

struct RunOptions {
    std::string subcommand;  ///< solve, compare, risk, malliavin, particles, norms
    std::filesystem::path scenario;
    std::filesystem::path out_dir;
    std::optional<double> tol;
    std::optional<int> max_iter;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand; diagnostics go to `log`.
int run(const RunOptions& opts, std::ostream& log);

} // namespace mfbdsvie

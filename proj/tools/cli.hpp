#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "citywatch/error.hpp"

namespace citywatch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitModel = 3;

/// Exit status for a library error code.
int exit_code_for(ErrorCode code) noexcept;

/// Runs one subcommand. `args` excludes the program name. Reports go to
/// `out`; failures print one JSON line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace citywatch::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dastank::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kEstimationFailure = 1;
inline constexpr int kUsageError = 2;

/// Runs `dastank <subcommand> ...`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dastank::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rdskit::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kValidationError = 2;
inline constexpr int kEstimatorUndefined = 3;

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Subcommands: simulate-network, simulate-rds, estimate,
/// power, forecast, replay.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdskit::cli

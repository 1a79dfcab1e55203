#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coopmon::cli {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kGeneration = 3, kBridge = 4 };

/// Entry point of the `coopmon` tool. Diagnostics go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coopmon::cli

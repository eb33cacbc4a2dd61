#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hdr::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kNumeric = 3 };

/// Entry point of the `hdrfuse` tool. `args` excludes the program name.
/// Results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hdr::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace brickvision::cli {

/// Entry point of the `brickvision` tool. Structured results go to `out` (or
/// to --out files), diagnostics to `err`. Returns the process exit code:
/// 0 on success, 1 on a processing error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace brickvision::cli

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace frh::cli {

/// Process exit statuses.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kFormat = 2,
  kMissing = 3,
  kBackend = 4,
};

/**
 * Runs the `frh` command line. `args` excludes the program name. Normal
 * output goes to `out`, diagnostics to `err`; `in` feeds `serve` in stdio
 * mode. Returns the exit status.
 */
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

/**
 * Splits a combined selector "B-A" at the unique '-' for which both halves
 * satisfy `known`. Returns nullopt when no split qualifies; throws
 * DomainError when more than one does.
 */
std::optional<std::pair<std::string, std::string>> split_combined(
    const std::string& selector, const std::function<bool(const std::string&)>& known);

}  // namespace frh::cli

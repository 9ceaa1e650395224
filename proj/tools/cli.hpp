#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crof::cli {

/// Exit code for malformed command lines and unknown config keys. Library
/// errors use crof::Error::exit_code().
inline constexpr int kUsageExit = 2;
inline constexpr int kInternalExit = 1;

/// Runs `crof <args...>`; args[0] is the program name. Normal output goes to
/// `out`, the one-line diagnostic for a failure to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crof::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evmcv {

// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;    // bad flags, unreadable or invalid config
inline constexpr int kExitFailure = 2;  // a fit or a verification check failed

/// Entry point of the `evmcv` tool: subcommands run, table, verify, list.
/// Reports go to --out when given, otherwise to out; diagnostics go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evmcv

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace locmono {

/// Exit codes of the command-line runner.
namespace exit_code {
inline constexpr int success = 0;
inline constexpr int usage = 1;
inline constexpr int refuted = 2;
inline constexpr int numerical = 3;
}  // namespace exit_code

/// Runs `locmono <subcommand> [flags]`; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace locmono

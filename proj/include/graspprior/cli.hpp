#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace graspprior
{

inline constexpr const char* kToolVersion = "graspprior 0.1.0";

/// Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "lo:hi:step" or a comma-separated list.
std::vector<double> parse_frictions(const std::string& text);

}  // namespace graspprior

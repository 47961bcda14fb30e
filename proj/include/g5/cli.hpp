#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace g5::cli {

/// Default seed for every subcommand; fixed so bare invocations reproduce.
inline constexpr uint64_t kDefaultSeed = 0xC0FFEE;

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 success, 1 usage or input errors, 2 a Vulnerable verdict when
/// --fail-on-vulnerable was given.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace g5::cli

/**
 * @file cli.hpp
 * @brief Batch command-line frontend.
 *
 * Exit codes: 0 success, 2 usage or validation error (including unreadable
 * inputs), 3 output I/O error, 4 internal invariant violation.
 */

#ifndef SUPIX_CLI_HPP
#define SUPIX_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "supix/core.hpp"

namespace supix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitInternal = 4;

int exit_code_for(ErrorKind kind);

/// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace supix::cli

#endif  // SUPIX_CLI_HPP

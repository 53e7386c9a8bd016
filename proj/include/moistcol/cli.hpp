/**
 * @file cli.hpp
 * @brief Batch front-end: simulate | ensemble | verify | converge | energy.
 *
 * Exit status: 0 ok, 1 config or I/O error, 2 check failure or step-invariant violation,
 * 3 any other runtime error.
 */
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace moistcol::cli {

enum Status : int { Ok = 0, ConfigFailure = 1, CheckFailure = 2, RuntimeFailure = 3 };

/// Runs one command line; human-readable output goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace moistcol::cli

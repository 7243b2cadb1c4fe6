#pragma once

#include <ostream>
#include <span>
#include <string>

namespace ivregime::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kNumerical = 3,
};

/// Runs one subcommand: simulate, estimate, check, bounds, regret, sweep, oracle.
/// `args` excludes the program name. Documents go to --out (or `out` when
/// absent); the one-line summary goes to `out`, or to `err` when the document
/// itself was written to `out`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ivregime::cli

#pragma once

#include <iosfwd>

namespace noisycoin::cli {

/// Parses the command line, runs one subcommand and returns the exit code.
/// Results go to `out` unless --output is given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace noisycoin::cli

#pragma once

#include <iosfwd>

namespace pscd {

/// Entry point of the `pscd` command-line tool. Returns the process exit
/// code; all output goes to `out` / `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pscd

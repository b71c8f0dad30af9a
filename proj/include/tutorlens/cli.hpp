#pragma once

#include <iosfwd>

namespace tutorlens {

// Entry point of the `tutorlens` tool. Returns the process exit code; on
// failure the error code name is printed to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tutorlens

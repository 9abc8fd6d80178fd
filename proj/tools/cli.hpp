#pragma once

#include <iosfwd>

namespace fosr::cli {

// Exit codes: 0 success, 1 runtime or numerical failure, 2 configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fosr::cli

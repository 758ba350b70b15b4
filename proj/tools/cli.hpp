#pragma once

#include <iosfwd>

namespace mbridge::cli {

// Entry point behind the `mbridge` binary. Returns 0 on success, 1 on a
// runtime error and 2 on bad usage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mbridge::cli

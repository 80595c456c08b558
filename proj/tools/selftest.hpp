#pragma once

#include <ostream>

namespace alphainv::tools {

/// Fast invariant checks (well under a minute). Prints one PASS/FAIL line per
/// check and returns the number of failures.
int run_selftest(std::ostream& out, int threads);

}  // namespace alphainv::tools

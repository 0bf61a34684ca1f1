#pragma once

#include <iosfwd>

namespace mtfr {

/// Quick invariant suite (seconds): one PASS/FAIL line per check.
/// Returns the number of failed checks.
int run_selftest(std::ostream& os);

}  // namespace mtfr

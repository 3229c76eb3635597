#pragma once

#include <iosfwd>

namespace stylip {

/// Gradient, statistics, token-mapping and metric self-tests at reduced
/// scale. Prints one PASS/FAIL line per check; returns true when all pass.
bool run_self_check(std::ostream& out);

}  // namespace stylip

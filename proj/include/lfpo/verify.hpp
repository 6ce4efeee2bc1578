// The runnable verification suite: gradient identities, implicit-target
// identities, finite-difference agreement, block-accumulation equivalence,
// stratified-sampling statistics, and EMA exactness. Each check reports an
// observed error (or p-value / margin) against its bound.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lfpo::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    double observed = 0.0;  // the measured quantity
    double bound = 0.0;     // the limit it was compared against
    std::string detail;     // e.g. "max abs error" / "p-value"
};

struct Options {
    std::uint64_t seed = 20240601;
    // Fault injection for exercising the failure path: flips the sign of
    // the cross-entropy gradient inside the gradient-identity checks.
    bool corrupt_ce_gradient = false;
};

std::vector<CheckResult> run_all(const Options& options);

bool all_pass(const std::vector<CheckResult>& results);

void print_table(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace lfpo::verify

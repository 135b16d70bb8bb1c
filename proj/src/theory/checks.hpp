#pragma once

#include <string>
#include <vector>

namespace pb::theory {

struct CheckResult {
    std::string id;
    bool pass = false;
    std::string detail;
};

// Certified contraction ratios: every (aggregator, delta, dim) cell in the
// grid must stay within its closed-form constant (+1e-9) across randomized
// adversarial trials.
std::vector<CheckResult> check_contraction_certificates(int trials, std::uint64_t seed);

// Equal-multiset message pairs on which every aggregator must answer
// identically and therefore violate the contraction inequality on one side.
std::vector<CheckResult> check_impossibility();

// Runs the momentum loop (alpha=1, full gradients) on paired quadratic
// instances: the worse instance's averaged squared gradient norm has to stay
// above delta^2 c^2 / 8 for every aggregator, and below 15 delta^2 c^2 for
// the plain mean.
std::vector<CheckResult> check_lower_bound_realization();

// Measured xi/A/sigma^2 on the quadratic instances against their closed
// forms, plus minimizer and gradient identities, all at 1e-12.
std::vector<CheckResult> check_quadratic_audit();

}  // namespace pb::theory

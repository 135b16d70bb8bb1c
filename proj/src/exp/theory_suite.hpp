#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace pb::exp {

struct TheorySuiteResult {
    bool all_pass = false;
    int passed = 0;
    int total = 0;
    std::string summary;    // printable, one line per check
    nlohmann::json report;  // {"all_pass", "passed", "total", "checks": [...]}
};

// Contraction certifications, the equal-multiset impossibility pairs, the
// paired quadratic lower-bound runs, and the measured-constant audit.
TheorySuiteResult run_theory_suite(int contraction_trials = 1000);

void write_theory_report(const TheorySuiteResult& result, const std::string& path);

}  // namespace pb::exp

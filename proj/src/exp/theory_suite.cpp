#include "exp/theory_suite.hpp"

#include <filesystem>
#include <fstream>
#include <vector>

#include "core/error.hpp"
#include "theory/checks.hpp"

namespace pb::exp {

TheorySuiteResult run_theory_suite(int contraction_trials) {
    std::vector<theory::CheckResult> checks =
        theory::check_contraction_certificates(contraction_trials, 20260814u);
    for (auto&& group : {theory::check_impossibility(), theory::check_lower_bound_realization(),
                         theory::check_quadratic_audit()})
        checks.insert(checks.end(), group.begin(), group.end());

    TheorySuiteResult r;
    r.total = static_cast<int>(checks.size());
    nlohmann::json arr = nlohmann::json::array();
    for (const theory::CheckResult& c : checks) {
        if (c.pass) ++r.passed;
        arr.push_back({{"id", c.id}, {"pass", c.pass}, {"detail", c.detail}});
        r.summary += (c.pass ? "[PASS] " : "[FAIL] ") + c.id + " (" + c.detail + ")\n";
    }
    r.all_pass = r.passed == r.total;
    r.summary += "theory suite: " + std::to_string(r.passed) + "/" + std::to_string(r.total) +
                 " checks passed\n";
    r.report = {{"all_pass", r.all_pass}, {"passed", r.passed}, {"total", r.total},
                {"checks", arr}};
    return r;
}

void write_theory_report(const TheorySuiteResult& result, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Status::Internal, "cannot write report to " + path);
    out << result.report.dump(2) << "\n";
}

}  // namespace pb::exp

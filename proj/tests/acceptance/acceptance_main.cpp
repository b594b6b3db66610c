// Acceptance suite: runs every oracle-based check at the pinned desk-scale
// resolutions and tolerances, prints one pass/fail line per criterion, and
// exits nonzero if any criterion fails. The checks run twice so the
// determinism contract (criterion 10) is exercised exactly as the verify
// command does it.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "qsflow/verify.hpp"

namespace {

const char* criterion_title(int id) {
    switch (id) {
        case 1: return "schwarzschild quasi-spherical reproduction";
        case 2: return "mass limit (ADM estimate 0.100 +/- 0.002)";
        case 3: return "monotonicity identity and refinement trend";
        case 4: return "equality case rigidity";
        case 5: return "H/R flow exactness on the sphere";
        case 6: return "convergence to round after convexity";
        case 7: return "speed-function conditions (1)-(3)";
        case 8: return "a-priori bound certificate";
        case 9: return "gauss-identity residual refinement";
        case 10: return "determinism and runtime budget";
    }
    return "?";
}

} // namespace

int main() {
    std::vector<qsflow::CheckResult> rows;
    const std::string out_dir; // acceptance run keeps everything in memory
    bool all = true;

    // two full passes, exactly as the verify command runs them, with the
    // determinism row appended from the byte comparison
    {
        qsflow::VerifySuite first = qsflow::run_acceptance_checks(12345, {});
        const qsflow::VerifySuite second = qsflow::run_acceptance_checks(12345, {});
        const bool identical = first.artifacts == second.artifacts;
        const double total = first.seconds + second.seconds;
        first.checks.push_back({10, "determinism-and-runtime", identical && total < 300.0,
                                identical ? 1.0 : 0.0, 1.0,
                                identical ? "outputs identical across two passes"
                                          : "outputs differ between passes",
                                total});
        rows = std::move(first.checks);
    }

    // aggregate rows by criterion (3 and 8 are covered by two rows each)
    std::map<int, bool> pass;
    std::map<int, std::string> detail;
    for (const auto& r : rows) {
        const auto it = pass.find(r.id);
        pass[r.id] = (it == pass.end() ? true : it->second) && r.pass;
        if (!detail[r.id].empty()) detail[r.id] += "; ";
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: %.4g (limit %.3g)", r.name.c_str(), r.measured,
                      r.threshold);
        detail[r.id] += buf;
    }

    for (int id = 1; id <= 10; ++id) {
        if (!pass.count(id)) {
            std::printf("[FAIL] criterion %2d: %s -- not executed\n", id, criterion_title(id));
            all = false;
            continue;
        }
        std::printf("[%s] criterion %2d: %-46s %s\n", pass[id] ? "PASS" : "FAIL", id,
                    criterion_title(id), detail[id].c_str());
        all = all && pass[id];
    }
    std::printf("%s\n", all ? "acceptance: all criteria satisfied"
                            : "acceptance: FAILURES present");
    return all ? 0 : 1;
}

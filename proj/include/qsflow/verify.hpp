#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qsflow {

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
    double seconds = 0.0; // reported to the caller, never serialized
};

struct VerifySuite {
    std::vector<CheckResult> checks;
    std::string artifacts; // deterministic serialization of every run product
    double seconds = 0.0;
    bool all_pass = false;
};

using EmitLine = std::function<void(const std::string&)>;

// Oracle-based acceptance checks 1..9 at fixed desk-scale resolutions.
VerifySuite run_acceptance_checks(std::uint64_t seed, const EmitLine& emit);

// Full verify command: runs the suite twice, compares the serialized outputs
// byte for byte (check 10), writes verify_table.csv and artifacts under
// out_dir (unless empty), and returns true iff every check passed.
bool run_verify(const std::string& out_dir, std::uint64_t seed, const EmitLine& emit);

} // namespace qsflow

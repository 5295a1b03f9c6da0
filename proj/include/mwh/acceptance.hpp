#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mwh {

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::string tier = "fast";  // fast: free levels capped at 5; full: 7
    std::uint64_t seed = 2024;
    int threads = 0;
    // deliberate fault injection for self-tests of the suite: "sandwich"
    // perturbs the reducing operators before checking criterion 1
    std::string fault;
};

/// Runs every acceptance criterion, streaming one pass/fail line per
/// criterion to `log`. Returns the per-criterion results.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log);

}  // namespace mwh

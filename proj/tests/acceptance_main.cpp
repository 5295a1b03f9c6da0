// Acceptance suite runner: one pass/fail line per criterion; exit code 0
// only when every criterion passes.

#include <cstring>
#include <iostream>

#include "mwh/acceptance.hpp"

int main(int argc, char** argv) {
    mwh::AcceptanceOptions options;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--tier") && i + 1 < argc) options.tier = argv[++i];
        else if (!std::strcmp(argv[i], "--seed") && i + 1 < argc) options.seed = std::strtoull(argv[++i], nullptr, 10);
        else if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) options.threads = std::atoi(argv[++i]);
        else if (!std::strcmp(argv[i], "--fault") && i + 1 < argc) options.fault = argv[++i];
        else {
            std::cerr << "usage: acceptance [--tier fast|full] [--seed N] [--threads N] [--fault sandwich]\n";
            return 1;
        }
    }
    auto results = mwh::run_acceptance(options, std::cout);
    int failures = 0;
    for (const auto& r : results) failures += r.pass ? 0 : 1;
    std::cout << (failures == 0 ? "ACCEPTANCE: all criteria passed"
                                : "ACCEPTANCE: " + std::to_string(failures) + " criteria failed")
              << std::endl;
    return failures == 0 ? 0 : 2;
}

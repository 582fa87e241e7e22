#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace freqpde {

struct PropertyResult {
    std::string name;
    bool pass = false;
    std::string detail;  // empty on pass
};

/// Runs the cross-module invariant suite on instances generated from `seed`.
/// Deterministic: same seed, same report, any thread count.
std::vector<PropertyResult> run_selftest(std::uint64_t seed);

}  // namespace freqpde

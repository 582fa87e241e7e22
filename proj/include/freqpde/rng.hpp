#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace freqpde {

/// FNV-1a, used to derive independent per-name RNG streams from one seed.
constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ull;
    }
    return h;
}

/// Deterministic uniform stream. mt19937_64 is fully specified by the
/// standard and the [0,1) mapping avoids distribution objects, so the
/// same (seed, key) yields bit-identical values on any platform.
class UniformStream {
public:
    UniformStream(std::uint64_t seed, std::string_view key)
        : engine_(mix(seed, fnv1a(key))) {}

    explicit UniformStream(std::uint64_t seed) : engine_(mix(seed, 0)) {}

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double next(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n).
    std::uint64_t next_index(std::uint64_t n) { return engine_() % n; }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ull + salt;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace freqpde

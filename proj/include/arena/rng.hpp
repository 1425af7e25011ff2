#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace arena {

// Purpose tags keep per-seller substreams independent of one another, so a
// consumer of one stream (e.g. a random bidder) can never shift the draws
// seen by another (e.g. click sampling).
enum class RngPurpose : std::uint64_t {
    Synthesis = 1,
    Decompose = 2,
    Outcome = 3,
    Algorithm = 4,
    Tuning = 5,
};

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, RngPurpose purpose, std::uint64_t key) {
    return mix64(mix64(mix64(master) ^ static_cast<std::uint64_t>(purpose)) ^ key);
}

// Deterministic random stream. Distributions are hand-rolled on top of
// mt19937_64 (whose output sequence is pinned by the standard) so draws are
// identical across standard libraries, build flags, and thread schedules.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
    RandomStream(std::uint64_t master, RngPurpose purpose, std::uint64_t key)
        : engine_(derive_seed(master, purpose, key)) {}

    std::uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller, one variate per pair of uniforms. No cached spare: the
    // stream advances identically no matter how calls interleave.
    double normal(double mean, double stddev) {
        constexpr double two_pi = 6.283185307179586476925286766559;
        const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform();
        return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double lognormal(double log_mean, double log_sigma) {
        return std::exp(normal(log_mean, log_sigma));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace arena

#pragma once

#include <cstdint>
#include <random>

namespace qbc {

// SplitMix64 finalizer. Used as the seed-mixing function everywhere a
// derived stream is needed, so that reruns, worker splits and the two
// transport modes all consume identical randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Documented mixing function H(master, i): the seed of trial/stream i.
// Distinct i give decorrelated streams regardless of worker assignment.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

// Session-level stream tags.
inline constexpr std::uint64_t kAliceStream = 0x414C494345ULL;  // "ALICE"
inline constexpr std::uint64_t kBobStream   = 0x424F42ULL;      // "BOB"

// Thin deterministic wrapper over mt19937_64. All sampling goes through
// the methods below (never std::*_distribution, whose output is
// implementation-defined) so results are stable for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    int bit() { return static_cast<int>(next() >> 63); }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n). Rejection sampling, exactly uniform.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~0ULL - ~0ULL % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace qbc

#pragma once

#include <cstdint>

namespace bpec {

// splitmix64 (Steele, Lea, Flood 2014). Chosen as the shared recipe
// generator because every party in a run must be able to reproduce the
// exact draw sequence from a 64-bit seed; the algorithm and constants are
// fixed here and documented in the README. Do not substitute std::mt19937
// or any platform RNG anywhere in the protocol path.
struct SplitMix64 {
    std::uint64_t state = 0;

    SplitMix64() = default;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        return mix(state);
    }

    // Uniform in [0,1) with 53 random bits.
    double unit() { return double(next() >> 11) * 0x1.0p-53; }

    // Uniform field element of GF(2^m): the low m bits of one draw.
    // Exact because q is a power of two; never rejects.
    std::uint16_t field_element(int m) {
        return std::uint16_t(next() & ((std::uint64_t{1} << m) - 1));
    }
};

// Derived streams: child k of a parent seed is the (k+1)-th output of a
// SplitMix64 stream seeded with the parent. Adding trials or streams never
// perturbs earlier ones.
inline std::uint64_t child_seed(std::uint64_t parent, std::uint64_t index) {
    return SplitMix64::mix(parent + (index + 1) * 0x9e3779b97f4a7c15ull);
}

}  // namespace bpec

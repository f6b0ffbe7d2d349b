#pragma once

#include <bit>
#include <cstdint>
#include <vector>

namespace bpec {

// User subsets are bitmasks: user i (1-based) <-> bit (i-1).
using mask_t = std::uint32_t;

inline int popcount(mask_t m) { return std::popcount(m); }

inline mask_t full_mask(int n) { return (n >= 32) ? ~mask_t{0} : ((mask_t{1} << n) - 1); }

inline bool has_user(mask_t m, int user) { return (m >> (user - 1)) & 1u; }

inline mask_t user_bit(int user) { return mask_t{1} << (user - 1); }

// Users of `m` in increasing order.
inline std::vector<int> users_of(mask_t m) {
    std::vector<int> out;
    while (m) {
        int b = std::countr_zero(m);
        out.push_back(b + 1);
        m &= m - 1;
    }
    return out;
}

// All subsets of m, including 0 and m itself. Order: the standard
// descending (sub-1)&m walk, which visits every subset exactly once.
template <typename F>
inline void for_each_subset(mask_t m, F&& f) {
    mask_t sub = m;
    while (true) {
        f(sub);
        if (sub == 0) break;
        sub = (sub - 1) & m;
    }
}

// Non-empty proper subsets of m.
template <typename F>
inline void for_each_proper_subset(mask_t m, F&& f) {
    for_each_subset(m, [&](mask_t s) {
        if (s != 0 && s != m) f(s);
    });
}

// Non-empty subsets of {1..n} ordered by level (popcount), then by numeric
// mask within a level. This is the queue-processing order used throughout.
inline std::vector<mask_t> masks_by_level(int n) {
    std::vector<mask_t> out;
    out.reserve((size_t{1} << n) - 1);
    for (int level = 1; level <= n; ++level)
        for (mask_t m = 1; m <= full_mask(n); ++m)
            if (popcount(m) == level) out.push_back(m);
    return out;
}

}  // namespace bpec

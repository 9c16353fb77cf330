#pragma once

#include <cmath>
#include <cstdint>

namespace spnf {

// Counter-based randomness. Every random draw in the project is a pure
// function of (seed, stream keys), so runs are bit-reproducible and
// independent of evaluation schedule. The mixer is splitmix64.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2)));
}

/// Maps a 64-bit word onto [0, 1) with all 53 mantissa bits pinned.
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

/// Stateless counter RNG: uniform(k...) is a pure function of the seed
/// and the stream keys.
struct CounterRng {
    std::uint64_t seed = 0;

    double uniform(std::uint64_t k0, std::uint64_t k1 = 0, std::uint64_t k2 = 0) const {
        std::uint64_t h = splitmix64(seed);
        h = hash_combine(h, k0);
        h = hash_combine(h, k1);
        h = hash_combine(h, k2);
        return u64_to_unit(h);
    }

    /// Standard normal via Box-Muller on two decorrelated counters.
    double gaussian(std::uint64_t k0, std::uint64_t k1 = 0, std::uint64_t k2 = 0) const {
        std::uint64_t h = splitmix64(seed ^ 0x5bf03635f0935ad1ull);
        h = hash_combine(h, k0);
        h = hash_combine(h, k1);
        h = hash_combine(h, k2);
        double u1 = u64_to_unit(h);
        double u2 = u64_to_unit(splitmix64(h ^ 0xd1b54a32d192ed03ull));
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }
};

/// Sequential generator for parameter initialization. xorshift-free,
/// fully pinned sequence (no dependence on libstdc++ distributions).
class SplitMixSequence {
public:
    explicit SplitMixSequence(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double next_unit() { return u64_to_unit(next_u64()); }

    /// Uniform on [-a, a].
    double next_symmetric(double a) { return a * (2.0 * next_unit() - 1.0); }

private:
    std::uint64_t state_;
};

}  // namespace spnf

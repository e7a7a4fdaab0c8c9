// Deterministic RNG with cheap substream derivation.
//
// Everything downstream (scene generation, subset draws, attack corruption)
// must be bit-reproducible across platforms for a fixed 64-bit seed, so we
// avoid std:: distributions (their output is implementation-defined) and use
// a hand-rolled xoshiro256++ core with splitmix64 seeding.

#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <vector>

namespace robosac {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Stable stream-id derivation: seed + a path of integers -> new seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = seed;
    std::uint64_t acc = splitmix64(s);
    for (std::uint64_t p : path) {
        s = acc ^ (p + 0x9E3779B97F4A7C15ull + (acc << 6) + (acc >> 2));
        acc = splitmix64(s);
    }
    return acc;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

    bool bernoulli(double p) { return unit() < p; }

    // Unbiased integer in [0, bound) via rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

    // Box-Muller; no cached spare, so the draw count per call is fixed.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = unit();
        if (u1 < 1e-300) u1 = 1e-300;
        const double u2 = unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586 * u2);
    }

    // Uniform random k-subset of {0, ..., population-1}, partial Fisher-Yates.
    // Returned indices are in draw order, not sorted.
    std::vector<int> subset(int population, int k) {
        std::vector<int> pool(static_cast<std::size_t>(population));
        for (int i = 0; i < population; ++i) pool[static_cast<std::size_t>(i)] = i;
        if (k > population) k = population;
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            const auto j = i + static_cast<int>(below(static_cast<std::uint64_t>(population - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            out.push_back(pool[static_cast<std::size_t>(i)]);
        }
        return out;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

}  // namespace robosac

// Test-only oracles, independent of the library implementations they check:
// Monte Carlo box-overlap area, brute-force assignment, subset enumeration,
// and the literal truncated-geometric sum.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "robosac/geometry.hpp"
#include "robosac/rng.hpp"

namespace oracles {

// Point-in-oriented-rectangle test via projection onto the box axes.
inline bool point_in_box(const robosac::OrientedBox& box, double x, double y) {
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double dx = x - box.center_x;
    const double dy = y - box.center_y;
    const double along = dx * c + dy * s;
    const double across = -dx * s + dy * c;
    return std::abs(along) <= box.length * 0.5 && std::abs(across) <= box.width * 0.5;
}

// IoU estimated by uniform sampling over the joint bounding square.
inline double mc_iou(const robosac::OrientedBox& a, const robosac::OrientedBox& b,
                     long long points, std::uint64_t seed) {
    const double reach_a = 0.5 * std::hypot(a.length, a.width);
    const double reach_b = 0.5 * std::hypot(b.length, b.width);
    const double lo_x = std::min(a.center_x - reach_a, b.center_x - reach_b);
    const double hi_x = std::max(a.center_x + reach_a, b.center_x + reach_b);
    const double lo_y = std::min(a.center_y - reach_a, b.center_y - reach_b);
    const double hi_y = std::max(a.center_y + reach_a, b.center_y + reach_b);
    robosac::Rng rng(seed);
    long long in_union = 0, in_inter = 0;
    for (long long i = 0; i < points; ++i) {
        const double x = rng.uniform(lo_x, hi_x);
        const double y = rng.uniform(lo_y, hi_y);
        const bool ia = point_in_box(a, x, y);
        const bool ib = point_in_box(b, x, y);
        if (ia || ib) ++in_union;
        if (ia && ib) ++in_inter;
    }
    if (in_union == 0) return 0.0;
    return static_cast<double>(in_inter) / static_cast<double>(in_union);
}

// Best total IoU over all one-to-one assignments (exhaustive permutations).
inline double brute_force_total_iou(const robosac::DetectionSet& a,
                                    const robosac::DetectionSet& b) {
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    if (na == 0 || nb == 0) return 0.0;
    std::vector<std::vector<double>> iou(static_cast<std::size_t>(na),
                                         std::vector<double>(static_cast<std::size_t>(nb)));
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j)
            iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                robosac::rotated_iou(a.boxes[static_cast<std::size_t>(i)],
                                     b.boxes[static_cast<std::size_t>(j)]);
    // permute over the larger side assigned into the smaller side
    if (na <= nb) {
        std::vector<int> perm(static_cast<std::size_t>(nb));
        std::iota(perm.begin(), perm.end(), 0);
        double best = 0.0;
        do {
            double total = 0.0;
            for (int i = 0; i < na; ++i)
                total += iou[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            best = std::max(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<int> perm(static_cast<std::size_t>(na));
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
        double total = 0.0;
        for (int j = 0; j < nb; ++j)
            total += iou[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])][static_cast<std::size_t>(j)];
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Exact clean-subset probability by enumerating all C(S, s) subsets.
inline double enumerate_clean_fraction(int team, int attackers, int sample) {
    std::vector<int> members(static_cast<std::size_t>(team));
    std::iota(members.begin(), members.end(), 0);
    // attacker ids are 0..attackers-1
    long long total = 0, clean = 0;
    std::vector<char> mask(static_cast<std::size_t>(team), 0);
    std::fill(mask.begin(), mask.begin() + sample, 1);
    std::sort(mask.begin(), mask.end());
    do {
        ++total;
        bool ok = true;
        for (int i = 0; i < team; ++i)
            if (mask[static_cast<std::size_t>(i)] && i < attackers) ok = false;
        if (ok) ++clean;
    } while (std::next_permutation(mask.begin(), mask.end()));
    return static_cast<double>(clean) / static_cast<double>(total);
}

// The spec formula for the truncated draw-count expectation, summed literally.
inline double truncated_geometric_mean(double q, long long cap) {
    double total = 0.0;
    double fail_pow = 1.0;  // (1-q)^(n-1)
    for (long long n = 1; n <= cap; ++n) {
        total += static_cast<double>(n) * q * fail_pow;
        fail_pow *= (1.0 - q);
    }
    total += static_cast<double>(cap) * fail_pow;
    return total;
}

// Empirical frequency of at least one clean draw among `budget` subset draws.
inline double mc_success_frequency(int team, int attackers, int sample, long long budget,
                                   long long trials, std::uint64_t seed) {
    robosac::Rng rng(seed);
    long long hits = 0;
    for (long long trial = 0; trial < trials; ++trial) {
        bool ok = false;
        for (long long n = 0; n < budget && !ok; ++n) {
            const auto subset = rng.subset(team, sample);
            bool clean = true;
            for (int idx : subset)
                if (idx < attackers) clean = false;  // attackers are ids 0..A-1
            ok = clean;
        }
        if (ok) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace oracles

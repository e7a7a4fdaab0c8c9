#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robosac/sampling.hpp"

using namespace robosac;

TEST_CASE("success_probability closed form") {
    CHECK(success_probability(0.0, 5, 1) == doctest::Approx(1.0));
    CHECK(success_probability(1.0, 1, 100) == doctest::Approx(0.0));
    CHECK(success_probability(0.2, 3, 7) >= 0.99);
    CHECK(success_probability(0.2, 3, 7) == doctest::Approx(0.9934091905759529).epsilon(1e-12));
    // s = 0: the empty subset is trivially clean
    CHECK(success_probability(0.7, 0, 3) == doctest::Approx(1.0));
    CHECK_THROWS_AS(success_probability(-0.1, 3, 7), std::invalid_argument);
    CHECK_THROWS_AS(success_probability(0.2, 3, 0), std::invalid_argument);
}

TEST_CASE("max_collaborators anchors") {
    CHECK(max_collaborators(0.99, 5, 0.1) == 4);
    CHECK(max_collaborators(0.99, 21, 0.8) == 1);
    CHECK(max_collaborators(0.99, 1, 0.9) == 0);
    CHECK(!max_collaborators(0.99, 5, 0.0).has_value());  // unbounded
    CHECK(max_collaborators(0.99, 5, 1.0) == 0);
}

TEST_CASE("sampling_budget reproduces the derivation table") {
    CHECK(sampling_budget(0.99, 1, 0.2) == 3);
    CHECK(sampling_budget(0.99, 2, 0.2) == 5);
    CHECK(sampling_budget(0.99, 3, 0.2) == 7);
    CHECK(sampling_budget(0.99, 4, 0.2) == 9);
    CHECK(sampling_budget(0.99, 1, 0.4) == 6);
    CHECK(sampling_budget(0.99, 2, 0.4) == 11);
    CHECK(sampling_budget(0.99, 3, 0.4) == 19);
    CHECK(sampling_budget(0.99, 1, 0.6) == 10);
    CHECK(sampling_budget(0.99, 2, 0.6) == 27);
    CHECK(sampling_budget(0.99, 1, 0.8) == 21);
    CHECK(sampling_budget(0.99, 5, 0.2) == 12);
    CHECK(sampling_budget(0.99, 3, 0.0) == 1);
    // (1-eta)^s underflows: no finite budget
    CHECK(!sampling_budget(0.99, 3000, 0.9999999999999).has_value());
}

TEST_CASE("clean_subset_probability equals subset enumeration") {
    CHECK(clean_subset_probability(5, 1, 3) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(clean_subset_probability(5, 2, 3) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(clean_subset_probability(5, 0, 5) == doctest::Approx(1.0));
    CHECK(clean_subset_probability(5, 3, 3) == doctest::Approx(0.0));
    for (int team = 2; team <= 8; ++team)
        for (int attackers = 0; attackers <= team; ++attackers)
            for (int sample = 0; sample <= team; ++sample) {
                CAPTURE(team);
                CAPTURE(attackers);
                CAPTURE(sample);
                CHECK(clean_subset_probability(team, attackers, sample) ==
                      doctest::Approx(oracles::enumerate_clean_fraction(team, attackers, sample))
                          .epsilon(1e-12));
            }
}

TEST_CASE("success_probability_exact frozen values") {
    CHECK(success_probability_exact(5, 1, 3, 7) == doctest::Approx(0.9720064).epsilon(1e-9));
    CHECK(success_probability_exact(5, 2, 3, 19) ==
          doctest::Approx(0.8649148282327007).epsilon(1e-9));
    CHECK(success_probability_exact(5, 5, 1, 10) == doctest::Approx(0.0));
    CHECK(success_probability_exact(5, 1, 4, 9) ==
          doctest::Approx(0.8657822719999999).epsilon(1e-9));
}

TEST_CASE("expected_steps equals the literal truncated sum") {
    // oracle: sum_{n=1..N} n q (1-q)^(n-1) + N (1-q)^N evaluated term by term
    CHECK(expected_steps(5, 1, 3, 7) ==
          doctest::Approx(oracles::truncated_geometric_mean(0.4, 7)).epsilon(1e-12));
    CHECK(expected_steps(5, 1, 3, 7) == doctest::Approx(2.430016).epsilon(1e-9));
    CHECK(expected_steps(5, 4, 1, 21) ==
          doctest::Approx(oracles::truncated_geometric_mean(0.2, 21)).epsilon(1e-12));
    CHECK(expected_steps(5, 4, 1, 21) == doctest::Approx(4.953883139815726).epsilon(1e-9));
    CHECK(expected_steps(5, 0, 3, 7) == doctest::Approx(1.0));
    CHECK(expected_steps(5, 5, 2, 13) == doctest::Approx(13.0));  // q = 0: every draw burns
}

TEST_CASE("probe_attempt_bounds") {
    const std::vector<double> grid = {0.0, 0.2, 0.4, 0.6, 0.8};
    const auto bounds = probe_attempt_bounds(grid, 5, 0.99);
    REQUIRE(bounds.size() == 5);
    CHECK(bounds[0] == 1);
    CHECK(bounds[1] == 9);
    CHECK(bounds[2] == 19);
    CHECK(bounds[3] == 27);
    CHECK(bounds[4] == 21);
    long long total = 0;
    for (long long b : bounds) total += b;
    CHECK(total == 77);

    CHECK(probe_attempt_bounds({0.0}, 5, 0.99) == std::vector<long long>{1});
    CHECK(probe_attempt_bounds({0.8}, 5, 0.99) == std::vector<long long>{21});
    CHECK_THROWS_AS(probe_attempt_bounds({0.3}, 5, 0.99), std::invalid_argument);   // 0.3*5 = 1.5
    CHECK_THROWS_AS(probe_attempt_bounds({0.4, 0.2}, 5, 0.99), std::invalid_argument);
}

TEST_CASE("round-trip and monotonicity sweep") {
    // ~1e4 parameter points
    int points = 0;
    for (double p : {0.9, 0.95, 0.99, 0.999}) {
        for (int eta_step = 1; eta_step <= 24; ++eta_step) {
            const double eta = eta_step / 25.0;
            long long prev_budget = 0;
            for (int s = 1; s <= 10; ++s) {
                const auto budget = sampling_budget(p, s, eta);
                if (!budget) continue;
                ++points;
                // budget round-trip: the budget actually achieves p
                CHECK(success_probability(eta, s, *budget) >= p - 1e-9);
                // minimality: one fewer draw misses p (when budget > 1)
                if (*budget > 1) CHECK(success_probability(eta, s, *budget - 1) < p + 1e-9);
                // monotone in s
                CHECK(*budget >= prev_budget);
                prev_budget = *budget;
            }
            for (long long n : {1, 2, 5, 9, 21, 60}) {
                const auto s_star = max_collaborators(p, n, eta);
                REQUIRE(s_star.has_value());
                ++points;
                if (*s_star >= 1) CHECK(success_probability(eta, *s_star, n) >= p - 1e-9);
                CHECK(success_probability(eta, *s_star + 1, n) < p + 1e-9);
            }
        }
    }
    CHECK(points > 1500);

    // sampling_budget nondecreasing in eta at fixed s
    for (int s : {1, 2, 3, 5}) {
        long long prev = 0;
        for (int eta_step = 1; eta_step <= 40; ++eta_step) {
            const auto budget = sampling_budget(0.99, s, eta_step / 45.0);
            REQUIRE(budget.has_value());
            CHECK(*budget >= prev);
            prev = *budget;
        }
    }
    // max_collaborators nonincreasing in eta, nondecreasing in N
    for (long long n : {1, 3, 7, 21}) {
        int prev = 1 << 30;
        for (int eta_step = 1; eta_step <= 40; ++eta_step) {
            const auto s = max_collaborators(0.99, n, eta_step / 45.0);
            REQUIRE(s.has_value());
            CHECK(*s <= prev);
            prev = *s;
        }
    }
    for (double eta : {0.1, 0.3, 0.6}) {
        int prev = 0;
        for (long long n = 1; n <= 40; ++n) {
            const auto s = max_collaborators(0.99, n, eta);
            REQUIRE(s.has_value());
            CHECK(*s >= prev);
            prev = *s;
        }
    }
}

TEST_CASE("without-replacement draws are never cleaner than binomial") {
    for (int team = 2; team <= 10; ++team)
        for (int attackers = 0; attackers <= team; ++attackers) {
            const double eta = static_cast<double>(attackers) / team;
            for (int sample = 1; sample <= team - attackers; ++sample) {
                const double exact = clean_subset_probability(team, attackers, sample);
                const double binom = std::pow(1.0 - eta, sample);
                CHECK(exact <= binom + 1e-12);
                const bool equality_case = sample == 1 || attackers == 0 || attackers == team;
                if (equality_case) {
                    CHECK(exact == doctest::Approx(binom).epsilon(1e-12));
                } else {
                    CHECK(exact < binom - 1e-12);
                }
            }
        }
}

TEST_CASE("Monte Carlo agreement with the exact model") {
    struct Case {
        int team, attackers, sample;
        long long budget;
    };
    for (const auto& c : {Case{5, 1, 3, 7}, Case{5, 2, 3, 19}, Case{5, 4, 1, 21},
                          Case{8, 3, 2, 11}}) {
        const long long trials = 100000;
        const double expected =
            success_probability_exact(c.team, c.attackers, c.sample, c.budget);
        const double freq = oracles::mc_success_frequency(c.team, c.attackers, c.sample,
                                                          c.budget, trials, 0xABCDEFull);
        const double se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(trials));
        CAPTURE(c.team);
        CAPTURE(c.attackers);
        CHECK(std::abs(freq - expected) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("SamplingPlan") {
    const auto plan = SamplingPlan::from_team(5, 1, 3, 0.99);
    CHECK(plan.budget == 7);
    CHECK(plan.attacker_count() == 1);
    CHECK(plan.benign_count() == 4);
    CHECK(plan.feasible());

    const auto tight = SamplingPlan::from_team(5, 4, 2, 0.99);
    CHECK(!tight.feasible());

    SamplingPlan bad;
    bad.attacker_ratio = 0.3;  // 0.3 * 5 is not integral
    bad.team_size = 5;
    bad.sample_size = 2;
    CHECK_THROWS_AS(bad.attacker_count(), std::invalid_argument);
}

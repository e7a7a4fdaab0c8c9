// Sampling-probability calculus for consensus-based teammate selection.
//
// Two families of formulas live here:
//  - the closed-form binomial (with-replacement) model used for planning:
//    success probability p = 1 - [1 - (1-eta)^s]^N, the max collaborator
//    count for a budget, and the budget for a desired collaborator count;
//  - the exact finite-population (hypergeometric) counterparts used as the
//    reference when validating the binomial approximation empirically.
//
// All functions are pure; probabilities are evaluated in log space so tiny
// clean-draw probabilities do not underflow.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace robosac {

// Planning quadruple: attacker ratio eta, team size S (teammates, excluding
// ego), sample size s, budget N, target confidence p.
struct SamplingPlan {
    double attacker_ratio = 0.0;
    int team_size = 0;
    int sample_size = 0;
    long long budget = 1;
    double confidence = 0.99;

    // Attacker count implied by eta*S; throws if eta*S is not integral.
    int attacker_count() const;
    int benign_count() const { return team_size - attacker_count(); }
    // A plan is feasible when a clean subset of the requested size exists.
    bool feasible() const { return sample_size <= benign_count(); }
    void validate() const;

    // Plan derived from a concrete team: eta = attackers/team, N from the
    // budget formula at the given confidence.
    static SamplingPlan from_team(int team_size, int attacker_count, int sample_size,
                                  double confidence);
};

// p = 1 - [1 - (1-eta)^s]^N, the probability that at least one of N
// independent size-s draws is attacker-free under the binomial model.
double success_probability(double eta, int sample_size, long long budget);

// Largest s with success probability >= p under budget N:
//   s = floor( ln(1 - (1-p)^(1/N)) / ln(1-eta) ).
// Returns nullopt when eta == 0 (unbounded: any s works).
std::optional<int> max_collaborators(double p, long long budget, double eta);

// Smallest N with success probability >= p for sample size s:
//   N = ceil( ln(1-p) / ln(1 - (1-eta)^s) ), minimum 1.
// Returns nullopt when (1-eta)^s underflows to zero (no finite budget).
std::optional<long long> sampling_budget(double p, int sample_size, double eta);

// Exact probability that a uniform size-s subset of S teammates (A of them
// attackers) contains no attacker: C(S-A, s) / C(S, s).
double clean_subset_probability(int team_size, int attacker_count, int sample_size);

// 1 - (1 - q)^N with q = clean_subset_probability: success probability of N
// independent draws, each without replacement within the draw.
double success_probability_exact(int team_size, int attacker_count, int sample_size,
                                 long long budget);

// Expected draws of the geometric draw process truncated at N:
//   sum_{n=1..N} n q (1-q)^(n-1) + N (1-q)^N  ==  (1 - (1-q)^N) / q.
double expected_steps(int team_size, int attacker_count, int sample_size, long long budget);

// Per-ratio attempt bounds for the aggressive-to-conservative ratio probe:
//   U_k = ceil( ln(1-p) / ln(1 - (1-R_k)^(S(1-R_k))) ),
// with U = 1 at R = 0 (sampling all S teammates has a single distinct
// subset, so one attempt decides). Each R_k must equal h/S for an integer
// h in [0, S), and the grid must be strictly ascending.
std::vector<long long> probe_attempt_bounds(const std::vector<double>& ratio_grid,
                                            int team_size, double p);

}  // namespace robosac

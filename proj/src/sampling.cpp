#include "robosac/sampling.hpp"

#include <cmath>
#include <limits>

namespace robosac {

namespace {

// Guard against float noise at exact-integer boundaries of ceil/floor.
constexpr double kRoundGuard = 1e-9;

void check_probability(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("confidence p must lie in (0,1)");
}

void check_ratio(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("attacker ratio must lie in [0,1]");
}

}  // namespace

int SamplingPlan::attacker_count() const {
    const double raw = attacker_ratio * team_size;
    const double rounded = std::round(raw);
    if (std::abs(raw - rounded) > 1e-9)
        throw std::invalid_argument("attacker_ratio * team_size is not an integer");
    return static_cast<int>(rounded);
}

void SamplingPlan::validate() const {
    check_ratio(attacker_ratio);
    check_probability(confidence);
    if (team_size <= 0) throw std::invalid_argument("team_size must be positive");
    if (sample_size < 0 || sample_size > team_size)
        throw std::invalid_argument("sample_size must lie in [0, team_size]");
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
}

SamplingPlan SamplingPlan::from_team(int team_size, int attacker_count, int sample_size,
                                     double confidence) {
    if (team_size <= 0) throw std::invalid_argument("team_size must be positive");
    if (attacker_count < 0 || attacker_count > team_size)
        throw std::invalid_argument("attacker_count must lie in [0, team_size]");
    SamplingPlan plan;
    plan.team_size = team_size;
    plan.attacker_ratio = static_cast<double>(attacker_count) / team_size;
    plan.sample_size = sample_size;
    plan.confidence = confidence;
    const auto budget = sampling_budget(confidence, std::max(sample_size, 1), plan.attacker_ratio);
    if (!budget) throw std::invalid_argument("no finite budget for this plan");
    plan.budget = *budget;
    plan.validate();
    return plan;
}

double success_probability(double eta, int sample_size, long long budget) {
    check_ratio(eta);
    if (sample_size < 0) throw std::invalid_argument("sample_size must be >= 0");
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (sample_size == 0) return 1.0;  // the empty subset is always clean
    if (eta == 0.0) return 1.0;
    if (eta == 1.0) return 0.0;
    const double clean = std::exp(sample_size * std::log1p(-eta));  // (1-eta)^s
    if (clean <= 0.0) return 0.0;
    if (clean >= 1.0) return 1.0;
    // 1 - (1-clean)^N without cancellation.
    return -std::expm1(static_cast<double>(budget) * std::log1p(-clean));
}

std::optional<int> max_collaborators(double p, long long budget, double eta) {
    check_probability(p);
    check_ratio(eta);
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    if (eta == 0.0) return std::nullopt;  // any s succeeds
    if (eta == 1.0) return 0;
    // t = 1 - (1-p)^(1/N), s = floor(ln t / ln(1-eta))
    const double per_draw_fail = std::log1p(-p) / static_cast<double>(budget);
    const double t = -std::expm1(per_draw_fail);
    if (t <= 0.0) return 0;
    const double value = std::log(t) / std::log1p(-eta);
    if (!(value > 0.0)) return 0;
    if (value >= static_cast<double>(std::numeric_limits<int>::max())) return std::numeric_limits<int>::max();
    return static_cast<int>(std::floor(value + kRoundGuard));
}

std::optional<long long> sampling_budget(double p, int sample_size, double eta) {
    check_probability(p);
    if (sample_size < 1) throw std::invalid_argument("sample_size must be >= 1");
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("attacker ratio must lie in [0,1)");
    if (eta == 0.0) return 1;  // every draw is clean
    const double clean = std::exp(sample_size * std::log1p(-eta));
    if (clean <= 0.0) return std::nullopt;  // underflow: no finite budget
    const double denom = std::log1p(-clean);
    if (denom == 0.0) return 1;
    const double value = std::log1p(-p) / denom;
    if (value >= 9.0e18) return std::nullopt;
    const double n = std::ceil(value - kRoundGuard);
    return std::max<long long>(1, static_cast<long long>(n));
}

double clean_subset_probability(int team_size, int attacker_count, int sample_size) {
    if (team_size < 0 || attacker_count < 0 || attacker_count > team_size)
        throw std::invalid_argument("need 0 <= attacker_count <= team_size");
    if (sample_size < 0 || sample_size > team_size)
        throw std::invalid_argument("need 0 <= sample_size <= team_size");
    const int benign = team_size - attacker_count;
    if (sample_size > benign) return 0.0;
    // C(benign, s) / C(team, s) as a telescoping product; each factor <= 1.
    double prob = 1.0;
    for (int i = 0; i < sample_size; ++i)
        prob *= static_cast<double>(benign - i) / static_cast<double>(team_size - i);
    return prob;
}

double success_probability_exact(int team_size, int attacker_count, int sample_size,
                                 long long budget) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    const double q = clean_subset_probability(team_size, attacker_count, sample_size);
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    return -std::expm1(static_cast<double>(budget) * std::log1p(-q));
}

double expected_steps(int team_size, int attacker_count, int sample_size, long long budget) {
    if (budget < 1) throw std::invalid_argument("budget must be >= 1");
    const double q = clean_subset_probability(team_size, attacker_count, sample_size);
    if (q <= 0.0) return static_cast<double>(budget);
    if (q >= 1.0) return 1.0;
    return -std::expm1(static_cast<double>(budget) * std::log1p(-q)) / q;
}

std::vector<long long> probe_attempt_bounds(const std::vector<double>& ratio_grid,
                                            int team_size, double p) {
    check_probability(p);
    if (team_size <= 0) throw std::invalid_argument("team_size must be positive");
    std::vector<long long> bounds;
    bounds.reserve(ratio_grid.size());
    double prev = -1.0;
    for (double ratio : ratio_grid) {
        if (!(ratio >= 0.0 && ratio < 1.0))
            throw std::invalid_argument("grid ratios must lie in [0,1)");
        if (!(ratio > prev)) throw std::invalid_argument("grid ratios must be strictly ascending");
        prev = ratio;
        const double raw_count = ratio * team_size;
        const double rounded = std::round(raw_count);
        if (std::abs(raw_count - rounded) > 1e-9)
            throw std::invalid_argument("grid ratio is not a multiple of 1/team_size");
        const int attackers = static_cast<int>(rounded);
        if (attackers == 0) {
            bounds.push_back(1);  // single distinct subset: one attempt decides
            continue;
        }
        const auto n = sampling_budget(p, team_size - attackers, ratio);
        if (!n) throw std::invalid_argument("attempt bound overflows for grid ratio");
        bounds.push_back(*n);
    }
    return bounds;
}

}  // namespace robosac

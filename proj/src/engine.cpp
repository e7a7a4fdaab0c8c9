#include "robosac/engine.hpp"

#include <algorithm>
#include <set>

namespace robosac {

namespace {

std::vector<AgentMessage> select_messages(std::span<const AgentMessage> teammates,
                                          const std::vector<int>& indices) {
    std::vector<AgentMessage> out;
    out.reserve(indices.size());
    for (int idx : indices) out.push_back(teammates[static_cast<std::size_t>(idx)]);
    return out;
}

std::vector<int> agent_ids(std::span<const AgentMessage> teammates,
                           const std::vector<int>& indices) {
    std::vector<int> ids;
    ids.reserve(indices.size());
    for (int idx : indices) ids.push_back(teammates[static_cast<std::size_t>(idx)].agent_id);
    std::sort(ids.begin(), ids.end());
    return ids;
}

void check_unique_ids(std::span<const AgentMessage> teammates) {
    std::set<int> seen;
    for (const auto& msg : teammates)
        if (!seen.insert(msg.agent_id).second)
            throw std::invalid_argument("duplicate agent_id within a frame");
}

// All size-k index subsets of [0, n), lexicographic.
std::vector<std::vector<int>> enumerate_subsets(int n, int k) {
    std::vector<std::vector<int>> all;
    std::vector<int> cur(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
    while (true) {
        all.push_back(cur);
        int pos = k - 1;
        while (pos >= 0 && cur[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
        if (pos < 0) break;
        ++cur[static_cast<std::size_t>(pos)];
        for (int i = pos + 1; i < k; ++i)
            cur[static_cast<std::size_t>(i)] = cur[static_cast<std::size_t>(i - 1)] + 1;
    }
    return all;
}

double binomial_count(int n, int k) {
    double result = 1.0;
    for (int i = 0; i < k; ++i) result *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    return result;
}

}  // namespace

void EngineConfig::validate() const {
    plan.validate();
    consensus.validate();
    if (unbounded_cap < 1) throw std::invalid_argument("unbounded_cap must be >= 1");
}

RobosacOutcome robosac_frame(const AgentMessage& ego, std::span<const AgentMessage> teammates,
                             FusionModel& model, const EngineConfig& cfg, Rng& rng,
                             const DetectionSet* reference) {
    cfg.validate();
    const int team = static_cast<int>(teammates.size());
    const int sample = cfg.plan.sample_size;
    if (sample > team)
        throw std::invalid_argument("plan sample_size exceeds available teammates");
    if (cfg.plan.team_size != team)
        throw std::invalid_argument("plan team_size does not match the message count");
    if (!cfg.plan.feasible())
        throw std::invalid_argument(
            "infeasible plan: fewer benign teammates than the requested sample size");
    check_unique_ids(teammates);

    DetectionSet individual;
    const DetectionSet* ref = reference;
    if (ref == nullptr) {
        individual = model.predict_individual(ego);
        ref = &individual;
    }

    const long long budget = cfg.run_unbounded ? cfg.unbounded_cap : cfg.plan.budget;

    RobosacOutcome outcome;

    std::vector<std::vector<int>> pool;  // no_repeat order
    if (cfg.subset_policy == SubsetPolicy::no_repeat) {
        if (binomial_count(team, sample) > 100000.0)
            throw std::invalid_argument("no_repeat requires a small number of distinct subsets");
        pool = enumerate_subsets(team, sample);
        for (std::size_t i = pool.size(); i > 1; --i)
            std::swap(pool[i - 1], pool[rng.below(i)]);
    }

    for (long long draw = 0; draw < budget; ++draw) {
        std::vector<int> indices;
        if (cfg.subset_policy == SubsetPolicy::no_repeat) {
            if (static_cast<std::size_t>(draw) >= pool.size()) break;  // all subsets tried
            indices = pool[static_cast<std::size_t>(draw)];
        } else {
            indices = rng.subset(team, sample);
        }
        const auto selected = select_messages(teammates, indices);
        DetectionSet fused = model.predict_fused(ego, selected);
        const double d = difference_measure(fused, *ref, cfg.consensus);
        outcome.draw_distances.push_back(d);
        outcome.draw_subsets.push_back(agent_ids(teammates, indices));
        ++outcome.steps_used;
        if (d <= cfg.consensus.epsilon) {
            outcome.output = std::move(fused);
            outcome.consensus_reached = true;
            outcome.accepted_teammates = outcome.draw_subsets.back();
            return outcome;
        }
    }
    // Budget spent: no collaboration this frame.
    outcome.output = *ref;
    outcome.consensus_reached = false;
    return outcome;
}

SequenceResult robosac_sequence(std::span<const FrameBundle> frames, FusionModel& model,
                                const EngineConfig& cfg) {
    cfg.validate();
    if (frames.empty()) throw std::invalid_argument("robosac_sequence needs at least one frame");

    std::vector<int> first_ids;
    for (const auto& msg : frames.front().teammates) first_ids.push_back(msg.agent_id);
    std::sort(first_ids.begin(), first_ids.end());

    SequenceResult result;
    result.outcomes.reserve(frames.size());

    std::optional<std::vector<int>> trusted;  // accepted agent ids (static mode)
    DetectionSet previous_output;             // temporal reference
    bool have_previous = false;

    for (std::size_t t = 0; t < frames.size(); ++t) {
        const FrameBundle& frame = frames[t];
        if (cfg.team_mode == TeamMode::static_team) {
            std::vector<int> ids;
            for (const auto& msg : frame.teammates) ids.push_back(msg.agent_id);
            std::sort(ids.begin(), ids.end());
            if (ids != first_ids)
                throw std::invalid_argument("static team mode requires persistent agent ids");
        }

        const bool temporal = cfg.reference == ReferenceMode::temporal && have_previous;
        DetectionSet individual;
        const DetectionSet* ref = nullptr;
        if (temporal) {
            ref = &previous_output;
        } else {
            individual = model.predict_individual(frame.ego);
            ++result.stats.individual_calls;
            ref = &individual;
        }

        RobosacOutcome outcome;
        bool handled = false;
        if (trusted) {
            // Fuse with the established partners; re-sample only if they fail.
            std::vector<AgentMessage> partners;
            for (const auto& msg : frame.teammates)
                if (std::binary_search(trusted->begin(), trusted->end(), msg.agent_id))
                    partners.push_back(msg);
            DetectionSet fused = model.predict_fused(frame.ego, partners);
            ++result.stats.fused_calls;
            if (consensus(fused, *ref, cfg.consensus)) {
                outcome.output = std::move(fused);
                outcome.consensus_reached = true;
                outcome.accepted_teammates = *trusted;
                handled = true;
            } else {
                trusted.reset();
                ++result.stats.revocations;
            }
        }
        if (!handled) {
            Rng rng(derive_seed(cfg.rng_seed, {0x64726177ull, static_cast<std::uint64_t>(frame.frame_id)}));
            outcome = robosac_frame(frame.ego, frame.teammates, model, cfg, rng, ref);
            result.stats.fused_calls += outcome.steps_used;
            if (cfg.team_mode == TeamMode::static_team && outcome.consensus_reached)
                trusted = outcome.accepted_teammates;
        }
        outcome.frame_id = frame.frame_id;
        result.stats.total_steps += outcome.steps_used;
        if (outcome.consensus_reached) ++result.stats.consensus_frames;
        previous_output = outcome.output;
        have_previous = true;
        result.outcomes.push_back(std::move(outcome));
    }
    return result;
}

}  // namespace robosac

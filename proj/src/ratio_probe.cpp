#include "robosac/ratio_probe.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "robosac/sampling.hpp"

namespace robosac {

bool ProbeState::saturated() const {
    for (std::size_t k = 0; k < counters.size(); ++k)
        if (counters[k] < bounds[k]) return false;
    return true;
}

std::optional<int> ProbeState::next_open() const {
    for (std::size_t k = 0; k < counters.size(); ++k)
        if (counters[k] < bounds[k]) return static_cast<int>(k);
    return std::nullopt;
}

void ProbeState::validate() const {
    if (ratios.empty()) throw std::invalid_argument("probe grid must be nonempty");
    if (ratios.size() != bounds.size() || ratios.size() != counters.size())
        throw std::invalid_argument("probe state arrays must have equal length");
    if (frame_budget < 1) throw std::invalid_argument("frame budget must be >= 1");
    if (team_size <= 0) throw std::invalid_argument("team_size must be positive");
    for (std::size_t k = 0; k < counters.size(); ++k)
        if (counters[k] < 0 || counters[k] > bounds[k])
            throw std::invalid_argument("probe counter out of range");
}

ProbeState make_probe_state(const std::vector<double>& ratio_grid, int team_size,
                            double confidence, long long frame_budget) {
    ProbeState state;
    state.ratios = ratio_grid;
    state.bounds = probe_attempt_bounds(ratio_grid, team_size, confidence);
    state.counters.assign(ratio_grid.size(), 0);
    state.frame_budget = frame_budget;
    state.team_size = team_size;
    state.validate();
    return state;
}

ProbeFrameLog probe_frame(ProbeState& state, const AgentMessage& ego,
                          std::span<const AgentMessage> teammates, FusionModel& model,
                          const ConsensusConfig& consensus_cfg, Rng& rng, int frame_id) {
    state.validate();
    consensus_cfg.validate();
    if (static_cast<int>(teammates.size()) != state.team_size)
        throw std::invalid_argument("message count does not match probe team size");

    ProbeFrameLog log;
    log.frame_id = frame_id;
    if (state.saturated()) return log;

    const DetectionSet individual = model.predict_individual(ego);

    for (long long probe = 0; probe < state.frame_budget; ++probe) {
        const auto open = state.next_open();
        if (!open) break;
        const int k = *open;
        const double ratio = state.ratios[static_cast<std::size_t>(k)];
        const int sample = state.team_size -
                           static_cast<int>(std::llround(ratio * state.team_size));

        const auto indices = rng.subset(state.team_size, sample);
        std::vector<AgentMessage> selected;
        selected.reserve(indices.size());
        for (int idx : indices) selected.push_back(teammates[static_cast<std::size_t>(idx)]);

        DetectionSet fused = model.predict_fused(ego, selected);
        const double d = difference_measure(fused, individual, consensus_cfg);

        ProbeRecord record;
        record.grid_index = k;
        record.ratio = ratio;
        for (int idx : indices)
            record.subset.push_back(teammates[static_cast<std::size_t>(idx)].agent_id);
        std::sort(record.subset.begin(), record.subset.end());
        record.distance = d;
        record.consensus = d <= consensus_cfg.epsilon;

        ++state.total_probes;
        if (record.consensus) {
            state.estimate = ratio;
            state.estimate_index = k;
            // Higher ratios need no probing: a clean subset of this size exists.
            for (std::size_t j = static_cast<std::size_t>(k); j < state.counters.size(); ++j)
                state.counters[j] = state.bounds[j];
            if (!log.accepted_output) log.accepted_output = std::move(fused);
        } else {
            ++state.counters[static_cast<std::size_t>(k)];
        }
        log.probes.push_back(std::move(record));
        if (state.saturated()) break;
    }
    return log;
}

ProbeRunResult probe_run(std::span<const FrameBundle> frames, FusionModel& model,
                         const std::vector<double>& ratio_grid, int team_size,
                         double confidence, long long frame_budget,
                         const ConsensusConfig& consensus_cfg, std::uint64_t seed,
                         std::optional<double> true_ratio) {
    if (frames.empty()) throw std::invalid_argument("probe_run needs at least one frame");
    ProbeRunResult result;
    ProbeState state = make_probe_state(ratio_grid, team_size, confidence, frame_budget);

    double last_estimate = state.estimate;
    for (const auto& frame : frames) {
        if (state.saturated()) break;
        Rng rng(derive_seed(seed, {0x70726f62ull, static_cast<std::uint64_t>(frame.frame_id)}));
        auto log = probe_frame(state, frame.ego, frame.teammates, model, consensus_cfg, rng,
                               frame.frame_id);
        if (state.estimate != last_estimate) {
            last_estimate = state.estimate;
            result.frames_to_final_estimate = frame.frame_id;
        }
        result.frames.push_back(std::move(log));
    }
    result.estimate = state.estimate;
    result.total_steps = state.total_probes;
    if (true_ratio) result.success = std::abs(state.estimate - *true_ratio) < 1e-9;
    result.final_state = std::move(state);
    return result;
}

}  // namespace robosac

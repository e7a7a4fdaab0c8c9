// Aggressive-to-conservative probing (A2CP) for unknown attacker ratios.
//
// The probe walks an ascending grid of candidate ratios R_k = h_k/S. Each
// probe samples S(1-R_k) teammates and checks consensus: success pins the
// estimate to R_k and closes every higher ratio; failure burns one of the
// U_k attempts granted to that ratio. Lower (more aggressive) ratios always
// get their full attempt bound before the estimate settles on a higher one.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "robosac/engine.hpp"

namespace robosac {

struct ProbeState {
    std::vector<double> ratios;       // ascending grid, each h/S
    std::vector<long long> bounds;    // U_k attempt bounds
    std::vector<long long> counters;  // T_k attempts consumed
    double estimate = 1.0;            // eta-hat; 1.0 until a consensus is seen
    int estimate_index = -1;          // grid index backing the estimate
    long long frame_budget = 5;       // probes allowed per frame
    long long total_probes = 0;
    int team_size = 0;

    bool saturated() const;
    // Lowest grid index with attempts remaining, or nullopt when saturated.
    std::optional<int> next_open() const;
    void validate() const;
};

ProbeState make_probe_state(const std::vector<double>& ratio_grid, int team_size,
                            double confidence, long long frame_budget);

struct ProbeRecord {
    int grid_index = -1;
    double ratio = 0.0;
    std::vector<int> subset;  // sampled agent ids
    double distance = 0.0;
    bool consensus = false;
};

struct ProbeFrameLog {
    int frame_id = 0;
    std::vector<ProbeRecord> probes;
    // Fused output of the first consensus probe this frame, if any; the
    // algorithm itself only needs the flag, but the output is usable
    // perception for the frame, so it is kept.
    std::optional<DetectionSet> accepted_output;
};

// Runs up to state.frame_budget probes on one frame's messages.
ProbeFrameLog probe_frame(ProbeState& state, const AgentMessage& ego,
                          std::span<const AgentMessage> teammates, FusionModel& model,
                          const ConsensusConfig& consensus_cfg, Rng& rng, int frame_id);

struct ProbeRunResult {
    double estimate = 1.0;
    int frames_to_final_estimate = 0;  // frame index where the estimate last changed
    long long total_steps = 0;
    bool success = false;  // estimate equals the true discretized ratio (when known)
    std::vector<ProbeFrameLog> frames;
    ProbeState final_state;
};

// Iterates probe_frame across a scene until every counter saturates or the
// scene ends. `true_ratio`, when provided, is only used to fill `success`.
ProbeRunResult probe_run(std::span<const FrameBundle> frames, FusionModel& model,
                         const std::vector<double>& ratio_grid, int team_size,
                         double confidence, long long frame_budget,
                         const ConsensusConfig& consensus_cfg, std::uint64_t seed,
                         std::optional<double> true_ratio = std::nullopt);

}  // namespace robosac

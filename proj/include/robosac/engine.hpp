// Per-frame hypothesize-and-verify loop: sample a teammate subset, fuse,
// compare against the reference output, accept on consensus or fall back to
// individual perception once the sampling budget is spent. Sequence modes:
//   dynamic  - sample independently every frame;
//   static   - keep fusing with the first accepted subset until it fails
//              consensus, then revoke and re-sample;
//   temporal - use the previous frame's accepted output as the reference
//              instead of fresh individual perception.

#pragma once

#include <any>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "robosac/geometry.hpp"
#include "robosac/rng.hpp"
#include "robosac/sampling.hpp"

namespace robosac {

struct AgentMessage {
    int agent_id = -1;
    std::any payload;  // interpreted only by a FusionModel implementation
};

// Behavior contract: predict_fused with an empty teammate list must equal
// predict_individual, and both must be deterministic given identical inputs.
// Implementations must be safe for concurrent calls or cloned per worker.
class FusionModel {
public:
    virtual ~FusionModel() = default;
    virtual DetectionSet predict_individual(const AgentMessage& ego) = 0;
    virtual DetectionSet predict_fused(const AgentMessage& ego,
                                       std::span<const AgentMessage> teammates) = 0;
};

struct RobosacOutcome {
    DetectionSet output;
    int frame_id = 0;
    long long steps_used = 0;
    bool consensus_reached = false;
    std::vector<int> accepted_teammates;        // empty on fallback
    std::vector<double> draw_distances;         // d value of each draw, in order
    std::vector<std::vector<int>> draw_subsets; // sampled agent ids per draw
};

enum class ReferenceMode { individual, temporal };
enum class TeamMode { dynamic_team, static_team };
// independent: every draw is a fresh uniform subset (the geometric model);
// no_repeat: enumerate distinct subsets in seeded random order.
enum class SubsetPolicy { independent, no_repeat };

struct EngineConfig {
    SamplingPlan plan;
    ConsensusConfig consensus;
    ReferenceMode reference = ReferenceMode::individual;
    TeamMode team_mode = TeamMode::dynamic_team;
    SubsetPolicy subset_policy = SubsetPolicy::independent;
    std::uint64_t rng_seed = 0;
    // 0 = use plan.budget; run_unbounded lets validation experiments sample
    // until consensus (steps are then compared with the theoretical budget).
    bool run_unbounded = false;
    long long unbounded_cap = 100000;

    void validate() const;
};

// One frame of Algorithm-style sampling. `reference` overrides the consensus
// reference (temporal mode); when null, individual perception is used.
RobosacOutcome robosac_frame(const AgentMessage& ego,
                             std::span<const AgentMessage> teammates, FusionModel& model,
                             const EngineConfig& cfg, Rng& rng,
                             const DetectionSet* reference = nullptr);

struct FrameBundle {
    int frame_id = 0;
    AgentMessage ego;
    std::vector<AgentMessage> teammates;
};

struct SequenceStats {
    long long total_steps = 0;
    long long fused_calls = 0;
    long long individual_calls = 0;
    int consensus_frames = 0;
    int revocations = 0;  // static mode: trusted set failed and was dropped
};

struct SequenceResult {
    std::vector<RobosacOutcome> outcomes;
    SequenceStats stats;
};

SequenceResult robosac_sequence(std::span<const FrameBundle> frames, FusionModel& model,
                                const EngineConfig& cfg);

}  // namespace robosac

// Output-level multi-agent perception simulator: seeded ground-truth worlds,
// per-agent partial visibility, benign late fusion with duplicate merging,
// and parametrized attack surrogates that corrupt the fused output (false
// positives, suppressed true boxes, positional jitter) instead of modeling
// feature-space perturbations.

#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "robosac/engine.hpp"
#include "robosac/geometry.hpp"
#include "robosac/rng.hpp"

namespace robosac {

enum class AttackKind { fp_flood, fn_suppress, mixed, subtle };

// severity scales all corruption channels; 0 means the attacker behaves
// exactly like a collaborator.
struct AttackConfig {
    AttackKind kind = AttackKind::mixed;
    double severity = 1.0;
};

struct ScenarioConfig {
    int team_size = 5;       // teammates, excluding ego
    int attacker_count = 1;
    int object_count = 20;
    double world_extent = 80.0;      // square world side, meters
    double ego_fov_radius = 34.0;    // sensing disc radius, all agents
    double benign_position_noise_sigma = 0.08;
    double benign_miss_rate = 0.0;
    AttackConfig attack;
    int frames = 100;
    std::uint64_t rng_seed = 1;
    // internals with sane defaults
    double min_separation = 6.0;   // object placement spacing
    double motion_sigma = 0.15;    // per-frame random walk, meters
    double merge_iou = 0.5;        // duplicate-merge threshold in fusion

    void validate() const;
};

struct SimWorldFrame {
    int frame_id = 0;
    DetectionSet ground_truth;
    // visible[a] = indices into ground_truth.boxes seen by agent a
    // (agent 0 is ego, 1..S are teammates).
    std::vector<std::vector<int>> visible;
    std::vector<bool> attacker_role;  // indexed by agent id; [0] always false
};

struct Scene {
    ScenarioConfig config;
    std::vector<SimWorldFrame> frames;
    std::vector<std::pair<double, double>> agent_positions;  // fixed per scene
    std::vector<int> attacker_ids() const;
};

// Seeded, reproducible world: uniform object placement with minimum
// separation, slow random-walk motion, per-agent visibility discs.
Scene generate_scene(const ScenarioConfig& cfg);

// Message payload produced by the simulator and consumed by SimFusionModel.
struct AgentObservation {
    int agent_id = -1;
    std::vector<OrientedBox> boxes;
    bool adversarial = false;
    AttackConfig attack;
    std::uint64_t corruption_salt = 0;
};

// Builds the per-agent messages for one frame: noisy observations of each
// agent's visible objects, with attack parameters attached to attacker
// messages (the payload is opaque to the defense).
FrameBundle make_frame_bundle(const Scene& scene, int frame_index);
std::vector<FrameBundle> make_all_bundles(const Scene& scene);

// Late fusion over contributed detections: greedy duplicate merge by IoU,
// averaged positions, score = fraction of contributing agents that agree.
// Any adversarial message corrupts the fused output per its AttackConfig;
// the corruption is a deterministic function of the participating messages.
class SimFusionModel : public FusionModel {
public:
    explicit SimFusionModel(const ScenarioConfig& cfg) : cfg_(cfg) {}

    DetectionSet predict_individual(const AgentMessage& ego) override;
    DetectionSet predict_fused(const AgentMessage& ego,
                               std::span<const AgentMessage> teammates) override;

    long long individual_calls() const { return individual_calls_.load(); }
    long long fused_calls() const { return fused_calls_.load(); }

private:
    ScenarioConfig cfg_;
    std::atomic<long long> individual_calls_{0};
    std::atomic<long long> fused_calls_{0};
};

struct CalibrationReport {
    bool pass = false;
    double epsilon = 0.3;
    double target_separation = 0.0;
    int sample_count = 0;
    double clean_median = 0.0;
    double clean_q99 = 0.0;
    double attacked_q1 = 0.0;
    double attacked_median = 0.0;
    std::string verdict;
};

// Empirical d distributions for clean and attacked fusions over at least
// min_frames frames; passes when the clean 99th percentile and the attacked
// 1st percentile straddle epsilon with the requested margin.
CalibrationReport calibrate_severity(const ScenarioConfig& cfg, double epsilon,
                                     double target_separation = 0.0, int min_frames = 1000);

struct FrameAp {
    double ap50 = 0.0;
    double ap70 = 0.0;
};

FrameAp evaluate_frame(const RobosacOutcome& outcome, const DetectionSet& ground_truth);
FrameAp evaluate_detections(const DetectionSet& output, const DetectionSet& ground_truth);

}  // namespace robosac

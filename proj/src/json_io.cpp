#include "robosac/json_io.hpp"

#include <ostream>
#include <stdexcept>

namespace robosac {

using nlohmann::json;

json to_json(const DetectionSet& set) {
    json boxes = json::array();
    for (const auto& box : set.boxes) {
        boxes.push_back({{"x", box.center_x},
                         {"y", box.center_y},
                         {"l", box.length},
                         {"w", box.width},
                         {"yaw", box.yaw},
                         {"score", box.score}});
    }
    return json{{"frame_id", set.frame_id}, {"boxes", std::move(boxes)}};
}

DetectionSet detection_set_from_json(const json& j) {
    DetectionSet set;
    set.frame_id = j.at("frame_id").get<int>();
    for (const auto& b : j.at("boxes")) {
        set.boxes.push_back(make_box(b.at("x").get<double>(), b.at("y").get<double>(),
                                     b.at("l").get<double>(), b.at("w").get<double>(),
                                     b.at("yaw").get<double>(), b.at("score").get<double>()));
    }
    return set;
}

std::string attack_kind_name(AttackKind kind) {
    switch (kind) {
        case AttackKind::fp_flood: return "fp_flood";
        case AttackKind::fn_suppress: return "fn_suppress";
        case AttackKind::mixed: return "mixed";
        case AttackKind::subtle: return "subtle";
    }
    throw std::logic_error("unknown attack kind");
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "fp_flood") return AttackKind::fp_flood;
    if (name == "fn_suppress") return AttackKind::fn_suppress;
    if (name == "mixed") return AttackKind::mixed;
    if (name == "subtle") return AttackKind::subtle;
    throw std::invalid_argument("unknown attack kind: " + name);
}

json to_json(const ScenarioConfig& cfg) {
    return json{{"team_size", cfg.team_size},
                {"attacker_count", cfg.attacker_count},
                {"object_count", cfg.object_count},
                {"world_extent", cfg.world_extent},
                {"ego_fov_radius", cfg.ego_fov_radius},
                {"benign_position_noise_sigma", cfg.benign_position_noise_sigma},
                {"benign_miss_rate", cfg.benign_miss_rate},
                {"attack", {{"kind", attack_kind_name(cfg.attack.kind)},
                            {"severity", cfg.attack.severity}}},
                {"frames", cfg.frames},
                {"rng_seed", cfg.rng_seed},
                {"min_separation", cfg.min_separation},
                {"motion_sigma", cfg.motion_sigma},
                {"merge_iou", cfg.merge_iou}};
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& value) {
    if (j.contains(key)) value = j.at(key).get<T>();
}

}  // namespace

ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig cfg;
    read_if(j, "team_size", cfg.team_size);
    read_if(j, "attacker_count", cfg.attacker_count);
    read_if(j, "object_count", cfg.object_count);
    read_if(j, "world_extent", cfg.world_extent);
    read_if(j, "ego_fov_radius", cfg.ego_fov_radius);
    read_if(j, "benign_position_noise_sigma", cfg.benign_position_noise_sigma);
    read_if(j, "benign_miss_rate", cfg.benign_miss_rate);
    if (j.contains("attack")) {
        const auto& a = j.at("attack");
        if (a.contains("kind")) cfg.attack.kind = attack_kind_from_name(a.at("kind").get<std::string>());
        read_if(a, "severity", cfg.attack.severity);
    }
    read_if(j, "frames", cfg.frames);
    read_if(j, "rng_seed", cfg.rng_seed);
    read_if(j, "min_separation", cfg.min_separation);
    read_if(j, "motion_sigma", cfg.motion_sigma);
    read_if(j, "merge_iou", cfg.merge_iou);
    cfg.validate();
    return cfg;
}

namespace {

std::string reference_name(ReferenceMode mode) {
    return mode == ReferenceMode::individual ? "individual" : "temporal";
}

std::string team_mode_name(TeamMode mode) {
    return mode == TeamMode::dynamic_team ? "dynamic" : "static";
}

std::string subset_policy_name(SubsetPolicy policy) {
    return policy == SubsetPolicy::independent ? "independent" : "no_repeat";
}

std::string difference_mode_name(DifferenceMode mode) {
    return mode == DifferenceMode::jaccard ? "jaccard" : "ego_fov";
}

}  // namespace

json to_json(const EngineConfig& cfg) {
    json consensus{{"epsilon", cfg.consensus.epsilon},
                   {"mode", difference_mode_name(cfg.consensus.mode)},
                   {"match_min_iou", cfg.consensus.match_min_iou}};
    if (cfg.consensus.fov) {
        consensus["fov"] = {{"x", cfg.consensus.fov->center_x},
                            {"y", cfg.consensus.fov->center_y},
                            {"radius", cfg.consensus.fov->radius}};
    }
    return json{{"plan",
                 {{"attacker_ratio", cfg.plan.attacker_ratio},
                  {"team_size", cfg.plan.team_size},
                  {"sample_size", cfg.plan.sample_size},
                  {"budget", cfg.plan.budget},
                  {"confidence", cfg.plan.confidence}}},
                {"consensus", std::move(consensus)},
                {"reference", reference_name(cfg.reference)},
                {"team_mode", team_mode_name(cfg.team_mode)},
                {"subset_policy", subset_policy_name(cfg.subset_policy)},
                {"rng_seed", cfg.rng_seed}};
}

EngineConfig engine_from_json(const json& j) {
    EngineConfig cfg;
    if (j.contains("plan")) {
        const auto& p = j.at("plan");
        read_if(p, "attacker_ratio", cfg.plan.attacker_ratio);
        read_if(p, "team_size", cfg.plan.team_size);
        read_if(p, "sample_size", cfg.plan.sample_size);
        read_if(p, "budget", cfg.plan.budget);
        read_if(p, "confidence", cfg.plan.confidence);
    }
    if (j.contains("consensus")) {
        const auto& c = j.at("consensus");
        read_if(c, "epsilon", cfg.consensus.epsilon);
        read_if(c, "match_min_iou", cfg.consensus.match_min_iou);
        if (c.contains("mode")) {
            const auto name = c.at("mode").get<std::string>();
            if (name == "jaccard") {
                cfg.consensus.mode = DifferenceMode::jaccard;
            } else if (name == "ego_fov") {
                cfg.consensus.mode = DifferenceMode::ego_fov;
            } else {
                throw std::invalid_argument("unknown difference mode: " + name);
            }
        }
        if (c.contains("fov")) {
            const auto& f = c.at("fov");
            cfg.consensus.fov = Fov{f.at("x").get<double>(), f.at("y").get<double>(),
                                    f.at("radius").get<double>()};
        }
    }
    if (j.contains("reference")) {
        const auto name = j.at("reference").get<std::string>();
        if (name == "individual") {
            cfg.reference = ReferenceMode::individual;
        } else if (name == "temporal") {
            cfg.reference = ReferenceMode::temporal;
        } else {
            throw std::invalid_argument("unknown reference mode: " + name);
        }
    }
    if (j.contains("team_mode")) {
        const auto name = j.at("team_mode").get<std::string>();
        if (name == "dynamic") {
            cfg.team_mode = TeamMode::dynamic_team;
        } else if (name == "static") {
            cfg.team_mode = TeamMode::static_team;
        } else {
            throw std::invalid_argument("unknown team mode: " + name);
        }
    }
    if (j.contains("subset_policy")) {
        const auto name = j.at("subset_policy").get<std::string>();
        if (name == "independent") {
            cfg.subset_policy = SubsetPolicy::independent;
        } else if (name == "no_repeat") {
            cfg.subset_policy = SubsetPolicy::no_repeat;
        } else {
            throw std::invalid_argument("unknown subset policy: " + name);
        }
    }
    read_if(j, "rng_seed", cfg.rng_seed);
    return cfg;
}

json outcome_record(const RobosacOutcome& outcome) {
    return json{{"frame_id", outcome.frame_id},
                {"steps_used", outcome.steps_used},
                {"consensus", outcome.consensus_reached},
                {"accepted_ids", outcome.accepted_teammates},
                {"d_values", outcome.draw_distances}};
}

void write_outcome_log(std::ostream& out, const std::vector<RobosacOutcome>& outcomes) {
    for (const auto& outcome : outcomes) out << outcome_record(outcome).dump() << '\n';
}

json probe_run_report(const ProbeRunResult& run, double true_ratio) {
    json frames = json::array();
    for (const auto& frame : run.frames) {
        json probes = json::array();
        for (const auto& probe : frame.probes) {
            probes.push_back({{"grid_index", probe.grid_index},
                              {"ratio", probe.ratio},
                              {"subset", probe.subset},
                              {"d", probe.distance},
                              {"consensus", probe.consensus}});
        }
        frames.push_back({{"frame_id", frame.frame_id}, {"probes", std::move(probes)}});
    }
    return json{{"true_ratio", true_ratio},
                {"estimate", run.estimate},
                {"frames_to_final", run.frames_to_final_estimate},
                {"total_steps", run.total_steps},
                {"success", run.success},
                {"per_frame", std::move(frames)}};
}

}  // namespace robosac

#include "robosac/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace robosac {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kObsYawSigma = 0.02;

// Stream labels for substream derivation.
constexpr std::uint64_t kStreamWorld = 0x776f726cull;
constexpr std::uint64_t kStreamMotion = 0x6d6f7465ull;
constexpr std::uint64_t kStreamRoles = 0x726f6c65ull;
constexpr std::uint64_t kStreamObs = 0x6f627376ull;
constexpr std::uint64_t kStreamAttack = 0x6174746bull;

struct CorruptionParams {
    int fp_count = 0;
    double delete_prob = 0.0;
    double jitter_sigma = 0.0;
    double yaw_jitter_sigma = 0.0;

    bool active() const {
        return fp_count > 0 || delete_prob > 0.0 || jitter_sigma > 0.0 || yaw_jitter_sigma > 0.0;
    }
};

CorruptionParams corruption_params(const AttackConfig& attack) {
    CorruptionParams p;
    const double sev = attack.severity;
    if (sev <= 0.0) return p;
    switch (attack.kind) {
        case AttackKind::fp_flood:
            p.fp_count = static_cast<int>(std::lround(12.0 * sev));
            break;
        case AttackKind::fn_suppress:
            p.delete_prob = std::min(0.95, 0.6 * sev);
            break;
        case AttackKind::mixed:
            p.fp_count = static_cast<int>(std::lround(8.0 * sev));
            p.delete_prob = std::min(0.9, 0.4 * sev);
            break;
        case AttackKind::subtle:
            p.jitter_sigma = 0.8 * sev;
            p.yaw_jitter_sigma = 0.08 * sev;
            break;
    }
    return p;
}

const AgentObservation& payload_of(const AgentMessage& msg) {
    const auto* ptr = std::any_cast<std::shared_ptr<const AgentObservation>>(&msg.payload);
    if (ptr == nullptr || *ptr == nullptr)
        throw std::invalid_argument("SimFusionModel received a foreign message payload");
    return **ptr;
}

AgentMessage wrap_observation(AgentObservation obs) {
    AgentMessage msg;
    msg.agent_id = obs.agent_id;
    msg.payload = std::make_shared<const AgentObservation>(std::move(obs));
    return msg;
}

struct Cluster {
    OrientedBox representative;
    OrientedBox first;
    double sum_x = 0.0, sum_y = 0.0, sum_l = 0.0, sum_w = 0.0;
    double sum_cos = 0.0, sum_sin = 0.0;
    int member_count = 0;
    std::uint64_t contributor_mask = 0;

    void add(const OrientedBox& box, int contributor) {
        if (member_count == 0) first = box;
        sum_x += box.center_x;
        sum_y += box.center_y;
        sum_l += box.length;
        sum_w += box.width;
        sum_cos += std::cos(box.yaw);
        sum_sin += std::sin(box.yaw);
        ++member_count;
        contributor_mask |= (std::uint64_t{1} << contributor);
        if (member_count == 1) {
            representative = box;
        } else {
            const double inv = 1.0 / member_count;
            representative.center_x = sum_x * inv;
            representative.center_y = sum_y * inv;
            representative.length = sum_l * inv;
            representative.width = sum_w * inv;
            representative.yaw = normalize_yaw(std::atan2(sum_sin, sum_cos));
        }
    }

    int contributors() const {
        std::uint64_t m = contributor_mask;
        int n = 0;
        while (m) {
            m &= m - 1;
            ++n;
        }
        return n;
    }
};

// Order-insensitive salt over the participating agents plus each attacker's
// own corruption salt: the same subset always corrupts the same way.
std::uint64_t fusion_salt(const AgentObservation& ego,
                          std::span<const AgentMessage> teammates) {
    std::vector<std::uint64_t> parts;
    parts.push_back(ego.corruption_salt ^ static_cast<std::uint64_t>(ego.agent_id + 1));
    for (const auto& msg : teammates) {
        const auto& obs = payload_of(msg);
        parts.push_back(obs.corruption_salt ^ static_cast<std::uint64_t>(obs.agent_id + 1));
    }
    std::sort(parts.begin(), parts.end());
    std::uint64_t seed = 0x66757365ull;
    for (std::uint64_t p : parts) seed = derive_seed(seed, {p});
    return seed;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (team_size <= 0 || team_size > 60) throw std::invalid_argument("team_size out of range");
    if (attacker_count < 0 || attacker_count > team_size)
        throw std::invalid_argument("attacker_count must lie in [0, team_size]");
    if (object_count <= 0) throw std::invalid_argument("object_count must be positive");
    if (!(world_extent > 0.0)) throw std::invalid_argument("world_extent must be positive");
    if (!(ego_fov_radius > 0.0)) throw std::invalid_argument("ego_fov_radius must be positive");
    if (!(benign_miss_rate >= 0.0 && benign_miss_rate < 1.0))
        throw std::invalid_argument("benign_miss_rate must lie in [0,1)");
    if (benign_position_noise_sigma < 0.0)
        throw std::invalid_argument("benign_position_noise_sigma must be >= 0");
    if (attack.severity < 0.0) throw std::invalid_argument("attack severity must be >= 0");
    if (frames <= 0) throw std::invalid_argument("frames must be positive");
    if (!(min_separation >= 0.0) || !(motion_sigma >= 0.0))
        throw std::invalid_argument("negative scenario parameter");
    if (!(merge_iou > 0.0 && merge_iou < 1.0))
        throw std::invalid_argument("merge_iou must lie in (0,1)");
}

std::vector<int> Scene::attacker_ids() const {
    std::vector<int> ids;
    if (frames.empty()) return ids;
    for (std::size_t a = 1; a < frames.front().attacker_role.size(); ++a)
        if (frames.front().attacker_role[a]) ids.push_back(static_cast<int>(a));
    return ids;
}

Scene generate_scene(const ScenarioConfig& cfg) {
    cfg.validate();
    Scene scene;
    scene.config = cfg;

    // Agent layout: ego at the origin, teammates on a ring. Positions are
    // independent of attacker assignment so that twin scenes (same seed,
    // different attacker counts) share identical worlds.
    scene.agent_positions.emplace_back(0.0, 0.0);
    const double ring = 0.30 * cfg.world_extent;
    for (int i = 1; i <= cfg.team_size; ++i) {
        const double angle = 2.0 * kPi * (i - 1) / cfg.team_size;
        scene.agent_positions.emplace_back(ring * std::cos(angle), ring * std::sin(angle));
    }

    // Roles: attacker identities fixed for the whole scene.
    std::vector<bool> roles(static_cast<std::size_t>(cfg.team_size) + 1, false);
    {
        Rng role_rng(derive_seed(cfg.rng_seed, {kStreamRoles}));
        const auto picks = role_rng.subset(cfg.team_size, cfg.attacker_count);
        for (int p : picks) roles[static_cast<std::size_t>(p) + 1] = true;
    }

    // Initial object placement with minimum-separation rejection.
    Rng world_rng(derive_seed(cfg.rng_seed, {kStreamWorld}));
    const double margin = 3.0;
    const double half = cfg.world_extent * 0.5 - margin;
    std::vector<OrientedBox> objects;
    objects.reserve(static_cast<std::size_t>(cfg.object_count));
    const int max_attempts = 200 * cfg.object_count;
    int attempts = 0;
    while (static_cast<int>(objects.size()) < cfg.object_count) {
        if (++attempts > max_attempts)
            throw std::runtime_error(
                "generate_scene: object placement infeasible under min_separation");
        const double x = world_rng.uniform(-half, half);
        const double y = world_rng.uniform(-half, half);
        bool ok = true;
        for (const auto& other : objects) {
            const double dx = x - other.center_x;
            const double dy = y - other.center_y;
            if (dx * dx + dy * dy < cfg.min_separation * cfg.min_separation) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        const double length = world_rng.uniform(4.0, 5.0);
        const double width = world_rng.uniform(1.8, 2.2);
        const double yaw = world_rng.uniform(-kPi, kPi);
        objects.push_back(make_box(x, y, length, width, yaw, 1.0));
    }

    scene.frames.reserve(static_cast<std::size_t>(cfg.frames));
    for (int t = 0; t < cfg.frames; ++t) {
        if (t > 0) {
            Rng motion_rng(derive_seed(cfg.rng_seed, {kStreamMotion, static_cast<std::uint64_t>(t)}));
            for (std::size_t i = 0; i < objects.size(); ++i) {
                auto& box = objects[i];
                const double nx =
                    std::clamp(box.center_x + motion_rng.normal(0.0, cfg.motion_sigma), -half, half);
                const double ny =
                    std::clamp(box.center_y + motion_rng.normal(0.0, cfg.motion_sigma), -half, half);
                // vehicles keep their spacing: a step that would violate the
                // separation constraint is skipped
                bool ok = true;
                for (std::size_t j = 0; j < objects.size(); ++j) {
                    if (j == i) continue;
                    const double dx = nx - objects[j].center_x;
                    const double dy = ny - objects[j].center_y;
                    if (dx * dx + dy * dy < cfg.min_separation * cfg.min_separation) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    box.center_x = nx;
                    box.center_y = ny;
                }
                box.yaw = normalize_yaw(box.yaw + motion_rng.normal(0.0, 0.01));
            }
        }
        SimWorldFrame frame;
        frame.frame_id = t;
        frame.ground_truth.frame_id = t;
        frame.ground_truth.boxes = objects;
        frame.attacker_role = roles;
        frame.visible.resize(static_cast<std::size_t>(cfg.team_size) + 1);
        for (int a = 0; a <= cfg.team_size; ++a) {
            const auto [ax, ay] = scene.agent_positions[static_cast<std::size_t>(a)];
            for (int o = 0; o < cfg.object_count; ++o) {
                const double dx = objects[static_cast<std::size_t>(o)].center_x - ax;
                const double dy = objects[static_cast<std::size_t>(o)].center_y - ay;
                if (dx * dx + dy * dy <= cfg.ego_fov_radius * cfg.ego_fov_radius)
                    frame.visible[static_cast<std::size_t>(a)].push_back(o);
            }
        }
        scene.frames.push_back(std::move(frame));
    }
    return scene;
}

FrameBundle make_frame_bundle(const Scene& scene, int frame_index) {
    const auto& cfg = scene.config;
    if (frame_index < 0 || frame_index >= static_cast<int>(scene.frames.size()))
        throw std::out_of_range("frame_index outside the scene");
    const auto& frame = scene.frames[static_cast<std::size_t>(frame_index)];

    FrameBundle bundle;
    bundle.frame_id = frame.frame_id;
    for (int a = 0; a <= cfg.team_size; ++a) {
        AgentObservation obs;
        obs.agent_id = a;
        Rng obs_rng(derive_seed(cfg.rng_seed, {kStreamObs, static_cast<std::uint64_t>(frame.frame_id),
                                               static_cast<std::uint64_t>(a)}));
        for (int o : frame.visible[static_cast<std::size_t>(a)]) {
            // Draw the miss decision and the noise unconditionally so the
            // stream layout does not depend on outcomes.
            const bool missed = obs_rng.bernoulli(cfg.benign_miss_rate);
            const double nx = obs_rng.normal(0.0, cfg.benign_position_noise_sigma);
            const double ny = obs_rng.normal(0.0, cfg.benign_position_noise_sigma);
            const double nyaw = obs_rng.normal(0.0, kObsYawSigma);
            if (missed) continue;
            const auto& gt = frame.ground_truth.boxes[static_cast<std::size_t>(o)];
            obs.boxes.push_back(make_box(gt.center_x + nx, gt.center_y + ny, gt.length, gt.width,
                                         gt.yaw + nyaw, 1.0));
        }
        obs.adversarial = frame.attacker_role[static_cast<std::size_t>(a)];
        obs.attack = cfg.attack;
        obs.corruption_salt = derive_seed(
            cfg.rng_seed,
            {kStreamAttack, static_cast<std::uint64_t>(frame.frame_id), static_cast<std::uint64_t>(a)});
        if (a == 0) {
            bundle.ego = wrap_observation(std::move(obs));
        } else {
            bundle.teammates.push_back(wrap_observation(std::move(obs)));
        }
    }
    return bundle;
}

std::vector<FrameBundle> make_all_bundles(const Scene& scene) {
    std::vector<FrameBundle> bundles;
    bundles.reserve(scene.frames.size());
    for (int t = 0; t < static_cast<int>(scene.frames.size()); ++t)
        bundles.push_back(make_frame_bundle(scene, t));
    return bundles;
}

namespace {

DetectionSet fuse(const ScenarioConfig& cfg, const AgentMessage& ego,
                  std::span<const AgentMessage> teammates) {
    const auto& ego_obs = payload_of(ego);
    const int n_messages = 1 + static_cast<int>(teammates.size());
    if (n_messages > 60) throw std::invalid_argument("too many messages to fuse");

    std::vector<Cluster> clusters;
    auto add_boxes = [&](const std::vector<OrientedBox>& boxes, int contributor) {
        for (const auto& box : boxes) {
            int best = -1;
            double best_iou = cfg.merge_iou;
            for (std::size_t c = 0; c < clusters.size(); ++c) {
                const double iou = rotated_iou(clusters[c].representative, box);
                if (iou > best_iou) {
                    best_iou = iou;
                    best = static_cast<int>(c);
                }
            }
            if (best < 0) {
                clusters.emplace_back();
                clusters.back().add(box, contributor);
            } else {
                clusters[static_cast<std::size_t>(best)].add(box, contributor);
            }
        }
    };
    add_boxes(ego_obs.boxes, 0);
    for (std::size_t i = 0; i < teammates.size(); ++i)
        add_boxes(payload_of(teammates[i]).boxes, static_cast<int>(i) + 1);

    DetectionSet fused;
    for (const auto& cluster : clusters) {
        // Singleton clusters pass through untouched so that fusing with an
        // empty teammate list reproduces the individual output bit-for-bit.
        OrientedBox box = (cluster.member_count == 1) ? cluster.first : cluster.representative;
        box.score = static_cast<double>(cluster.contributors()) / n_messages;
        fused.boxes.push_back(box);
    }

    // Any adversarial participant corrupts the whole fused output, mirroring
    // how a poisoned shared feature degrades a jointly decoded result.
    std::vector<const AgentObservation*> attackers;
    for (const auto& msg : teammates) {
        const auto& obs = payload_of(msg);
        if (obs.adversarial && corruption_params(obs.attack).active()) attackers.push_back(&obs);
    }
    if (!attackers.empty()) {
        std::sort(attackers.begin(), attackers.end(),
                  [](const AgentObservation* a, const AgentObservation* b) {
                      return a->agent_id < b->agent_id;
                  });
        const std::uint64_t salt = fusion_salt(ego_obs, teammates);
        for (const AgentObservation* attacker : attackers) {
            Rng rng(derive_seed(attacker->corruption_salt, {salt}));
            const CorruptionParams p = corruption_params(attacker->attack);
            if (p.delete_prob > 0.0) {
                std::vector<OrientedBox> kept;
                kept.reserve(fused.boxes.size());
                for (const auto& box : fused.boxes)
                    if (!rng.bernoulli(p.delete_prob)) kept.push_back(box);
                fused.boxes.swap(kept);
            }
            if (p.jitter_sigma > 0.0 || p.yaw_jitter_sigma > 0.0) {
                for (auto& box : fused.boxes) {
                    box.center_x += rng.normal(0.0, p.jitter_sigma);
                    box.center_y += rng.normal(0.0, p.jitter_sigma);
                    box.yaw = normalize_yaw(box.yaw + rng.normal(0.0, p.yaw_jitter_sigma));
                }
            }
            for (int f = 0; f < p.fp_count; ++f) {
                // Fake detections planted inside the ego viewpoint.
                const double radius = std::max(cfg.ego_fov_radius - 2.0, 1.0) * std::sqrt(rng.unit());
                const double angle = rng.uniform(0.0, 2.0 * kPi);
                fused.boxes.push_back(make_box(radius * std::cos(angle), radius * std::sin(angle),
                                               rng.uniform(4.0, 5.0), rng.uniform(1.8, 2.2),
                                               rng.uniform(-kPi, kPi), rng.uniform(0.6, 1.0)));
            }
        }
    }
    return fused;
}

}  // namespace

DetectionSet SimFusionModel::predict_individual(const AgentMessage& ego) {
    individual_calls_.fetch_add(1, std::memory_order_relaxed);
    return fuse(cfg_, ego, {});
}

DetectionSet SimFusionModel::predict_fused(const AgentMessage& ego,
                                           std::span<const AgentMessage> teammates) {
    fused_calls_.fetch_add(1, std::memory_order_relaxed);
    return fuse(cfg_, ego, teammates);
}

CalibrationReport calibrate_severity(const ScenarioConfig& cfg, double epsilon,
                                     double target_separation, int min_frames) {
    cfg.validate();
    if (cfg.attacker_count < 1)
        throw std::invalid_argument("calibrate_severity needs at least one attacker");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon must lie in (0,1)");

    ScenarioConfig run_cfg = cfg;
    run_cfg.frames = std::max(cfg.frames, min_frames);
    const Scene scene = generate_scene(run_cfg);
    SimFusionModel model(run_cfg);

    ConsensusConfig ccfg;
    ccfg.epsilon = epsilon;
    ccfg.mode = DifferenceMode::ego_fov;
    ccfg.fov = Fov{0.0, 0.0, run_cfg.ego_fov_radius};

    const int sample = std::min(3, run_cfg.team_size - run_cfg.attacker_count) > 0
                           ? std::min(3, run_cfg.team_size - run_cfg.attacker_count)
                           : 1;
    std::vector<int> benign, attackers;
    for (int a = 1; a <= run_cfg.team_size; ++a) {
        if (scene.frames.front().attacker_role[static_cast<std::size_t>(a)])
            attackers.push_back(a);
        else
            benign.push_back(a);
    }

    std::vector<double> clean_d, attacked_d;
    clean_d.reserve(scene.frames.size());
    attacked_d.reserve(scene.frames.size());
    for (int t = 0; t < run_cfg.frames; ++t) {
        const FrameBundle bundle = make_frame_bundle(scene, t);
        const DetectionSet individual = model.predict_individual(bundle.ego);
        Rng rng(derive_seed(run_cfg.rng_seed, {0x63616c62ull, static_cast<std::uint64_t>(t)}));

        auto pick = [&](const std::vector<int>& ids, int count) {
            std::vector<AgentMessage> msgs;
            const auto chosen = rng.subset(static_cast<int>(ids.size()), count);
            for (int c : chosen)
                msgs.push_back(bundle.teammates[static_cast<std::size_t>(
                    ids[static_cast<std::size_t>(c)] - 1)]);
            return msgs;
        };

        if (static_cast<int>(benign.size()) >= sample) {
            const auto msgs = pick(benign, sample);
            clean_d.push_back(
                difference_measure(model.predict_fused(bundle.ego, msgs), individual, ccfg));
        }
        {
            auto msgs = pick(attackers, 1);
            if (sample > 1 && !benign.empty()) {
                auto extra = pick(benign, std::min(sample - 1, static_cast<int>(benign.size())));
                msgs.insert(msgs.end(), extra.begin(), extra.end());
            }
            attacked_d.push_back(
                difference_measure(model.predict_fused(bundle.ego, msgs), individual, ccfg));
        }
    }

    auto quantile = [](std::vector<double> values, double q) {
        if (values.empty()) return 0.0;
        std::sort(values.begin(), values.end());
        const auto idx = static_cast<std::size_t>(
            std::clamp(q * static_cast<double>(values.size()) - 1.0, 0.0,
                       static_cast<double>(values.size()) - 1.0));
        return values[idx];
    };

    CalibrationReport report;
    report.epsilon = epsilon;
    report.target_separation = target_separation;
    report.sample_count = static_cast<int>(attacked_d.size());
    report.clean_median = quantile(clean_d, 0.50);
    report.clean_q99 = quantile(clean_d, 0.99);
    report.attacked_q1 = quantile(attacked_d, 0.01);
    report.attacked_median = quantile(attacked_d, 0.50);
    report.pass = (report.clean_q99 < epsilon - target_separation) &&
                  (report.attacked_q1 > epsilon + target_separation);
    report.verdict = report.pass ? "PASS" : "FAIL";
    return report;
}

FrameAp evaluate_detections(const DetectionSet& output, const DetectionSet& ground_truth) {
    return FrameAp{average_precision(output, ground_truth, 0.5),
                   average_precision(output, ground_truth, 0.7)};
}

FrameAp evaluate_frame(const RobosacOutcome& outcome, const DetectionSet& ground_truth) {
    return evaluate_detections(outcome.output, ground_truth);
}

}  // namespace robosac

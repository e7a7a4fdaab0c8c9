#include "robosac/experiments.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "robosac/json_io.hpp"
#include "robosac/ratio_probe.hpp"
#include "robosac/sampling.hpp"

namespace robosac {

namespace {

std::string fmt(double value, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    return std::string(buf);
}

std::string fmt_rate(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return std::string(buf);
}

double binomial_se(double p, long long n) {
    if (n <= 0) return 0.0;
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

template <typename T, typename Fn>
std::vector<T> map_repeats(int repeats, Fn fn) {
    std::vector<std::future<T>> futures;
    futures.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r)
        futures.push_back(std::async(std::launch::async, fn, r));
    std::vector<T> out;
    out.reserve(static_cast<std::size_t>(repeats));
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

Assertion check(std::string name, bool pass, std::string detail) {
    return Assertion{std::move(name), pass, std::move(detail)};
}

bool subset_is_clean(const std::vector<int>& accepted, const std::vector<int>& attacker_ids) {
    for (int id : accepted)
        if (std::binary_search(attacker_ids.begin(), attacker_ids.end(), id)) return false;
    return true;
}

std::vector<int> benign_ids_of(const Scene& scene) {
    std::vector<int> out;
    const auto attackers = scene.attacker_ids();
    for (int a = 1; a <= scene.config.team_size; ++a)
        if (!std::binary_search(attackers.begin(), attackers.end(), a)) out.push_back(a);
    return out;
}

std::vector<AgentMessage> messages_for_ids(const FrameBundle& bundle,
                                           const std::vector<int>& ids) {
    std::vector<AgentMessage> out;
    for (const auto& msg : bundle.teammates)
        if (std::find(ids.begin(), ids.end(), msg.agent_id) != ids.end()) out.push_back(msg);
    return out;
}

struct ApAccum {
    double ap50_sum = 0.0;
    double ap70_sum = 0.0;
    long long count = 0;

    void add(const FrameAp& ap) {
        ap50_sum += ap.ap50;
        ap70_sum += ap.ap70;
        ++count;
    }
    void add(const ApAccum& other) {
        ap50_sum += other.ap50_sum;
        ap70_sum += other.ap70_sum;
        count += other.count;
    }
    double ap50() const { return count ? ap50_sum / static_cast<double>(count) : 0.0; }
    double ap70() const { return count ? ap70_sum / static_cast<double>(count) : 0.0; }
};

constexpr std::uint64_t kExpValidate = 1;
constexpr std::uint64_t kExpTradeoff = 2;
constexpr std::uint64_t kExpEstimate = 3;
constexpr std::uint64_t kExpModes = 4;
constexpr std::uint64_t kExpAblation = 5;

}  // namespace

bool Table::all_pass() const {
    for (const auto& a : assertions)
        if (!a.pass) return false;
    return true;
}

std::string table_to_csv(const Table& table) {
    std::ostringstream out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out << ',';
        out << table.columns[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << row[c];
        }
        out << '\n';
    }
    return out.str();
}

nlohmann::json table_to_json(const Table& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json obj;
        for (std::size_t c = 0; c < row.size() && c < table.columns.size(); ++c)
            obj[table.columns[c]] = row[c];
        rows.push_back(std::move(obj));
    }
    nlohmann::json assertions = nlohmann::json::array();
    for (const auto& a : table.assertions)
        assertions.push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
    return nlohmann::json{{"name", table.name},
                          {"rows", std::move(rows)},
                          {"assertions", std::move(assertions)},
                          {"pass", table.all_pass()}};
}

void write_table(const Table& table, const ExperimentOptions& opts) {
    if (opts.out_dir.empty()) return;
    std::filesystem::create_directories(opts.out_dir);
    const bool csv = opts.format == OutputFormat::csv;
    const auto path = std::filesystem::path(opts.out_dir) /
                      (table.name + (csv ? ".csv" : ".json"));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    if (csv) {
        out << table_to_csv(table);
    } else {
        out << table_to_json(table).dump(2) << '\n';
    }
}

nlohmann::json summary_json(const std::vector<Table>& tables) {
    nlohmann::json out = nlohmann::json::array();
    bool all = true;
    for (const auto& table : tables) {
        out.push_back(table_to_json(table));
        all = all && table.all_pass();
    }
    return nlohmann::json{{"tables", std::move(out)}, {"pass", all}};
}

ConsensusConfig default_consensus(const ScenarioConfig& scenario, double epsilon) {
    ConsensusConfig cfg;
    cfg.epsilon = epsilon;
    cfg.mode = DifferenceMode::ego_fov;
    cfg.fov = Fov{0.0, 0.0, scenario.ego_fov_radius};
    cfg.match_min_iou = 0.1;
    return cfg;
}

// ---------------------------------------------------------------- validate

namespace {

struct ValidateAccum {
    long long frames = 0;
    long long successes = 0;
    double steps_sum = 0.0;
    double capped_sum = 0.0;
    long long min_steps = LLONG_MAX;
    long long max_steps = 0;

    void add(const ValidateAccum& o) {
        frames += o.frames;
        successes += o.successes;
        steps_sum += o.steps_sum;
        capped_sum += o.capped_sum;
        min_steps = std::min(min_steps, o.min_steps);
        max_steps = std::max(max_steps, o.max_steps);
    }
};

}  // namespace

std::vector<Table> run_validate_bounds(const ExperimentOptions& opts) {
    struct Row {
        double eta;
        int sample;
    };
    const std::vector<Row> rows = {{0.0, 3}, {0.2, 1}, {0.2, 2}, {0.2, 3}, {0.2, 4},
                                   {0.4, 1}, {0.4, 2}, {0.4, 3}, {0.6, 1}, {0.6, 2},
                                   {0.8, 1}};
    const int repeats = opts.repeats > 0 ? opts.repeats : 10;

    Table table;
    table.name = "validate_bounds";
    table.columns = {"eta",          "s",           "N",          "avg_steps",
                     "min_steps",    "max_steps",   "success_rate", "success_pred_exact",
                     "success_pred_binomial", "avg_steps_capped", "expected_steps_pred"};

    for (std::size_t row_idx = 0; row_idx < rows.size(); ++row_idx) {
        const auto& row = rows[row_idx];
        const int team = opts.scenario.team_size;
        const int attackers = static_cast<int>(std::llround(row.eta * team));
        const SamplingPlan plan =
            SamplingPlan::from_team(team, attackers, row.sample, opts.confidence);
        const long long budget = plan.budget;

        auto worker = [&, row_idx](int repeat) {
            ScenarioConfig sc = opts.scenario;
            sc.attacker_count = attackers;
            sc.rng_seed = derive_seed(opts.seed, {kExpValidate, row_idx,
                                                  static_cast<std::uint64_t>(repeat)});
            const Scene scene = generate_scene(sc);
            SimFusionModel model(sc);
            EngineConfig ec;
            ec.plan = plan;
            ec.consensus = default_consensus(sc, opts.epsilon);
            ec.run_unbounded = true;
            ec.unbounded_cap = 10000;
            ec.rng_seed = sc.rng_seed;

            ValidateAccum acc;
            for (int t = 0; t < sc.frames; ++t) {
                const FrameBundle bundle = make_frame_bundle(scene, t);
                Rng rng(derive_seed(ec.rng_seed, {0x76616c64ull, static_cast<std::uint64_t>(t)}));
                const RobosacOutcome outcome =
                    robosac_frame(bundle.ego, bundle.teammates, model, ec, rng);
                const long long steps = outcome.steps_used;
                ++acc.frames;
                if (outcome.consensus_reached && steps <= budget) ++acc.successes;
                acc.steps_sum += static_cast<double>(steps);
                acc.capped_sum += static_cast<double>(std::min(steps, budget));
                acc.min_steps = std::min(acc.min_steps, steps);
                acc.max_steps = std::max(acc.max_steps, steps);
            }
            return acc;
        };

        ValidateAccum total;
        for (const auto& acc : map_repeats<ValidateAccum>(repeats, worker)) total.add(acc);

        const double rate = static_cast<double>(total.successes) /
                            static_cast<double>(total.frames);
        const double pred = success_probability_exact(team, attackers, row.sample, budget);
        const double pred_binom = success_probability(row.eta, row.sample, budget);
        const double capped_avg = total.capped_sum / static_cast<double>(total.frames);
        const double capped_pred = expected_steps(team, attackers, row.sample, budget);

        table.rows.push_back({fmt(row.eta, 3), std::to_string(row.sample),
                              std::to_string(budget),
                              fmt(total.steps_sum / static_cast<double>(total.frames), 4),
                              std::to_string(total.min_steps), std::to_string(total.max_steps),
                              fmt_rate(rate), fmt_rate(pred), fmt_rate(pred_binom),
                              fmt(capped_avg, 4), fmt(capped_pred, 4)});

        char label[64];
        std::snprintf(label, sizeof label, "eta%.1f_s%d", row.eta, row.sample);
        const double se = binomial_se(pred, total.frames);
        table.assertions.push_back(check(
            std::string("validate_bounds/") + label + "_success_within_3se",
            std::abs(rate - pred) <= 3.0 * se,
            "rate=" + fmt_rate(rate) + " pred=" + fmt_rate(pred) + " 3se=" + fmt(3.0 * se, 3)));
        table.assertions.push_back(check(
            std::string("validate_bounds/") + label + "_steps_within_15pct",
            std::abs(capped_avg - capped_pred) <= 0.15 * capped_pred,
            "avg=" + fmt(capped_avg, 4) + " pred=" + fmt(capped_pred, 4)));
    }
    return {table};
}

// ---------------------------------------------------------------- tradeoff

namespace {

struct TradeoffAccum {
    // indexed by budget position
    std::vector<long long> successes;
    std::vector<ApAccum> ap;
    ApAccum lower, upper, upper_pp, no_defense;
    long long frames = 0;

    explicit TradeoffAccum(std::size_t budgets) : successes(budgets, 0), ap(budgets) {}

    void add(const TradeoffAccum& o) {
        for (std::size_t i = 0; i < successes.size(); ++i) {
            successes[i] += o.successes[i];
            ap[i].add(o.ap[i]);
        }
        lower.add(o.lower);
        upper.add(o.upper);
        upper_pp.add(o.upper_pp);
        no_defense.add(o.no_defense);
        frames += o.frames;
    }
};

struct CurveAccum {
    long long successes = 0;
    long long steps = 0;
    ApAccum ap;
    long long frames = 0;
};

}  // namespace

std::vector<Table> run_tradeoff(const ExperimentOptions& opts) {
    const std::vector<long long> budgets = {1, 3, 5, 7};
    const int repeats = opts.repeats > 0 ? opts.repeats : 5;
    const int team = opts.scenario.team_size;
    const int sample = 3;
    const int attackers = 1;
    const SamplingPlan plan = SamplingPlan::from_team(team, attackers, sample, opts.confidence);

    auto worker = [&](int repeat) {
        ScenarioConfig sc = opts.scenario;
        sc.attacker_count = attackers;
        sc.rng_seed = derive_seed(opts.seed, {kExpTradeoff, static_cast<std::uint64_t>(repeat)});
        ScenarioConfig twin_cfg = sc;
        twin_cfg.attacker_count = 0;  // same world, every teammate benign

        const Scene scene = generate_scene(sc);
        const Scene twin = generate_scene(twin_cfg);
        SimFusionModel model(sc);
        SimFusionModel twin_model(twin_cfg);
        const auto attacker_ids = scene.attacker_ids();
        const auto benign = benign_ids_of(scene);
        const std::vector<int> upper_ids(benign.begin(), benign.begin() + sample);

        EngineConfig ec;
        ec.plan = plan;  // budget 7: lower budgets reuse the same draw stream
        ec.consensus = default_consensus(sc, opts.epsilon);
        ec.rng_seed = sc.rng_seed;

        TradeoffAccum acc(budgets.size());
        for (int t = 0; t < sc.frames; ++t) {
            const FrameBundle bundle = make_frame_bundle(scene, t);
            const FrameBundle twin_bundle = make_frame_bundle(twin, t);
            const DetectionSet& gt = scene.frames[static_cast<std::size_t>(t)].ground_truth;
            const DetectionSet individual = model.predict_individual(bundle.ego);

            Rng rng(derive_seed(ec.rng_seed, {0x74726164ull, static_cast<std::uint64_t>(t)}));
            const RobosacOutcome outcome =
                robosac_frame(bundle.ego, bundle.teammates, model, ec, rng, &individual);
            const bool clean =
                outcome.consensus_reached && subset_is_clean(outcome.accepted_teammates, attacker_ids);
            const FrameAp fused_ap = evaluate_frame(outcome, gt);
            const FrameAp individual_ap = evaluate_detections(individual, gt);

            for (std::size_t b = 0; b < budgets.size(); ++b) {
                if (outcome.consensus_reached && outcome.steps_used <= budgets[b]) {
                    if (clean) ++acc.successes[b];
                    acc.ap[b].add(fused_ap);
                } else {
                    acc.ap[b].add(individual_ap);
                }
            }
            acc.lower.add(individual_ap);
            acc.upper.add(evaluate_detections(
                model.predict_fused(bundle.ego, messages_for_ids(bundle, upper_ids)), gt));
            acc.upper_pp.add(evaluate_detections(
                twin_model.predict_fused(twin_bundle.ego, twin_bundle.teammates), gt));
            acc.no_defense.add(evaluate_detections(
                model.predict_fused(bundle.ego, bundle.teammates), gt));
            ++acc.frames;
        }
        return acc;
    };

    TradeoffAccum total(budgets.size());
    for (const auto& acc : map_repeats<TradeoffAccum>(repeats, worker)) total.add(acc);

    Table table;
    table.name = "tradeoff";
    table.columns = {"setup", "ap50", "ap70", "success_rate", "success_pred_exact"};
    table.rows.push_back({"upper_bound_pp", fmt_rate(total.upper_pp.ap50()),
                          fmt_rate(total.upper_pp.ap70()), "-", "-"});
    table.rows.push_back({"upper_bound", fmt_rate(total.upper.ap50()),
                          fmt_rate(total.upper.ap70()), "-", "-"});
    std::vector<double> ap50s;
    for (std::size_t b = budgets.size(); b-- > 0;) {
        const double rate = static_cast<double>(total.successes[b]) /
                            static_cast<double>(total.frames);
        const double pred = success_probability_exact(team, attackers, sample, budgets[b]);
        table.rows.push_back({"budget_" + std::to_string(budgets[b]),
                              fmt_rate(total.ap[b].ap50()), fmt_rate(total.ap[b].ap70()),
                              fmt_rate(rate), fmt_rate(pred)});
    }
    table.rows.push_back({"lower_bound", fmt_rate(total.lower.ap50()),
                          fmt_rate(total.lower.ap70()), "-", "-"});
    table.rows.push_back({"no_defense", fmt_rate(total.no_defense.ap50()),
                          fmt_rate(total.no_defense.ap70()), "-", "-"});

    for (std::size_t b = 0; b < budgets.size(); ++b) {
        const double rate = static_cast<double>(total.successes[b]) /
                            static_cast<double>(total.frames);
        const double pred = success_probability_exact(team, attackers, sample, budgets[b]);
        const double se = binomial_se(pred, total.frames);
        ap50s.push_back(total.ap[b].ap50());
        table.assertions.push_back(check(
            "tradeoff/budget" + std::to_string(budgets[b]) + "_success_within_3se",
            std::abs(rate - pred) <= 3.0 * se,
            "rate=" + fmt_rate(rate) + " pred=" + fmt_rate(pred) + " 3se=" + fmt(3.0 * se, 3)));
    }
    bool increasing = true;
    for (std::size_t b = 1; b < ap50s.size(); ++b) increasing = increasing && ap50s[b] > ap50s[b - 1];
    table.assertions.push_back(check("tradeoff/ap_strictly_increasing_in_budget", increasing,
                                     "ap50 by budget: " + fmt(ap50s[0], 4) + " " +
                                         fmt(ap50s[1], 4) + " " + fmt(ap50s[2], 4) + " " +
                                         fmt(ap50s[3], 4)));
    bool bracketed = true;
    for (std::size_t b = 0; b < ap50s.size(); ++b)
        bracketed = bracketed && total.lower.ap50() <= ap50s[b] && ap50s[b] <= total.upper_pp.ap50();
    table.assertions.push_back(check(
        "tradeoff/ap_bracketed_by_bounds", bracketed,
        "lower=" + fmt_rate(total.lower.ap50()) + " upper_pp=" + fmt_rate(total.upper_pp.ap50())));

    // Budget/collaborator sweep (the trade-off curve): s = 1..4 at the
    // matching theoretical budget.
    Table curve;
    curve.name = "tradeoff_curve";
    curve.columns = {"s", "N", "success_rate", "avg_steps", "ap50", "ap70"};
    for (int s = 1; s <= std::min(4, team - attackers); ++s) {
        const SamplingPlan sweep_plan =
            SamplingPlan::from_team(team, attackers, s, opts.confidence);
        auto sweep_worker = [&, s](int repeat) {
            ScenarioConfig sc = opts.scenario;
            sc.attacker_count = attackers;
            sc.rng_seed =
                derive_seed(opts.seed, {kExpTradeoff, static_cast<std::uint64_t>(repeat)});
            const Scene scene = generate_scene(sc);
            SimFusionModel model(sc);
            const auto attacker_ids = scene.attacker_ids();
            EngineConfig ec;
            ec.plan = sweep_plan;
            ec.consensus = default_consensus(sc, opts.epsilon);
            ec.rng_seed = derive_seed(sc.rng_seed, {static_cast<std::uint64_t>(s)});
            CurveAccum acc;
            for (int t = 0; t < sc.frames; ++t) {
                const FrameBundle bundle = make_frame_bundle(scene, t);
                const DetectionSet& gt = scene.frames[static_cast<std::size_t>(t)].ground_truth;
                Rng rng(derive_seed(ec.rng_seed, {0x63757276ull, static_cast<std::uint64_t>(t)}));
                const RobosacOutcome outcome =
                    robosac_frame(bundle.ego, bundle.teammates, model, ec, rng);
                if (outcome.consensus_reached &&
                    subset_is_clean(outcome.accepted_teammates, attacker_ids))
                    ++acc.successes;
                acc.steps += outcome.steps_used;
                acc.ap.add(evaluate_frame(outcome, gt));
                ++acc.frames;
            }
            return acc;
        };
        CurveAccum total_curve;
        for (const auto& acc : map_repeats<CurveAccum>(repeats, sweep_worker)) {
            total_curve.successes += acc.successes;
            total_curve.steps += acc.steps;
            total_curve.ap.add(acc.ap);
            total_curve.frames += acc.frames;
        }
        curve.rows.push_back(
            {std::to_string(s), std::to_string(sweep_plan.budget),
             fmt_rate(static_cast<double>(total_curve.successes) /
                      static_cast<double>(total_curve.frames)),
             fmt(static_cast<double>(total_curve.steps) / static_cast<double>(total_curve.frames), 4),
             fmt_rate(total_curve.ap.ap50()), fmt_rate(total_curve.ap.ap70())});
    }
    return {table, curve};
}

// ---------------------------------------------------------------- estimation

std::vector<Table> run_estimation(const ExperimentOptions& opts) {
    const std::vector<double> grid = {0.0, 0.2, 0.4, 0.6, 0.8};
    const int team = opts.scenario.team_size;
    const long long frame_budget = 5;
    const int repeats = opts.repeats > 0 ? opts.repeats : 20;

    Table table;
    table.name = "estimation";
    table.columns = {"true_ratio",       "frames_to_final", "estimate_mean", "error_mean",
                     "total_steps_mean", "success_rate",    "expected_steps_serial"};

    std::vector<double> step_means;
    std::vector<double> ratios;
    for (int attackers = 0; attackers <= team; ++attackers)
        ratios.push_back(static_cast<double>(attackers) / team);

    const ConsensusConfig ccfg = default_consensus(opts.scenario, opts.epsilon);

    for (int attackers = 0; attackers <= team; ++attackers) {
        const double true_ratio = ratios[static_cast<std::size_t>(attackers)];
        auto worker = [&, attackers](int repeat) {
            ScenarioConfig sc = opts.scenario;
            sc.attacker_count = attackers;
            sc.rng_seed = derive_seed(opts.seed, {kExpEstimate, static_cast<std::uint64_t>(attackers),
                                                  static_cast<std::uint64_t>(repeat)});
            const Scene scene = generate_scene(sc);
            SimFusionModel model(sc);
            const auto bundles = make_all_bundles(scene);
            return probe_run(bundles, model, grid, team, opts.confidence, frame_budget, ccfg,
                             sc.rng_seed, true_ratio);
        };
        const auto runs = map_repeats<ProbeRunResult>(repeats, worker);

        double frames_sum = 0.0, estimate_sum = 0.0, error_sum = 0.0, steps_sum = 0.0;
        int successes = 0;
        for (const auto& run : runs) {
            frames_sum += run.frames_to_final_estimate;
            estimate_sum += run.estimate;
            error_sum += std::abs(run.estimate - true_ratio);
            steps_sum += static_cast<double>(run.total_steps);
            if (run.success) ++successes;
        }
        const double n = static_cast<double>(runs.size());

        // Closed-form expected total probes for the serialized probe order,
        // using the exact per-draw clean probabilities.
        double expected_total = 0.0, reach = 1.0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const int h = static_cast<int>(std::llround(grid[k] * team));
            const int s = team - h;
            const double q = clean_subset_probability(team, attackers, s);
            const long long bound = probe_attempt_bounds(grid, team, opts.confidence)[k];
            if (q <= 0.0) {
                expected_total += reach * static_cast<double>(bound);
            } else {
                expected_total += reach * expected_steps(team, attackers, s, bound);
                reach *= std::pow(1.0 - q, static_cast<double>(bound));
            }
        }

        step_means.push_back(steps_sum / n);
        table.rows.push_back({fmt(true_ratio, 3), fmt(frames_sum / n, 4),
                              fmt(estimate_sum / n, 4), fmt(error_sum / n, 4),
                              fmt(steps_sum / n, 5), fmt_rate(successes / n),
                              fmt(expected_total, 5)});

        if (attackers == 0) {
            bool all_one = true, all_exact = true;
            for (const auto& run : runs) {
                all_one = all_one && run.total_steps == 1;
                all_exact = all_exact && run.estimate == 0.0;
            }
            table.assertions.push_back(check("estimation/ratio0_single_step", all_one && all_exact,
                                             "steps_mean=" + fmt(steps_sum / n, 4)));
        } else if (attackers == team) {
            bool all_77 = true, all_top = true;
            for (const auto& run : runs) {
                all_77 = all_77 && run.total_steps == 77;
                all_top = all_top && run.estimate == 1.0;
            }
            table.assertions.push_back(check("estimation/ratio1_saturates_77", all_77 && all_top,
                                             "steps_mean=" + fmt(steps_sum / n, 5)));
        } else {
            table.assertions.push_back(check(
                "estimation/ratio" + fmt(true_ratio, 2) + "_success_ge_0.85",
                successes / n >= 0.85, "success=" + fmt_rate(successes / n)));
        }
    }

    bool monotone = true;
    for (std::size_t i = 1; i < step_means.size(); ++i)
        monotone = monotone && step_means[i] > step_means[i - 1];
    table.assertions.push_back(check("estimation/steps_monotone_in_ratio", monotone,
                                     "means: " + [&] {
                                         std::string s;
                                         for (double m : step_means) s += fmt(m, 4) + " ";
                                         return s;
                                     }()));
    return {table};
}

// ---------------------------------------------------------------- modes

namespace {

struct ModeAccum {
    long long frames = 0;
    long long consensus_frames = 0;
    long long steps = 0;
    long long sampling_frames = 0;  // frames with steps > 0
    long long fused_calls = 0;
    long long individual_calls = 0;
    ApAccum ap;

    void add(const ModeAccum& o) {
        frames += o.frames;
        consensus_frames += o.consensus_frames;
        steps += o.steps;
        sampling_frames += o.sampling_frames;
        fused_calls += o.fused_calls;
        individual_calls += o.individual_calls;
        ap.add(o.ap);
    }
};

}  // namespace

std::vector<Table> run_modes(const ExperimentOptions& opts) {
    const int repeats = opts.repeats > 0 ? opts.repeats : 10;
    const int team = opts.scenario.team_size;
    const int attackers = 1;
    const SamplingPlan plan = SamplingPlan::from_team(team, attackers, 3, opts.confidence);

    struct ModeSpec {
        const char* label;
        TeamMode team_mode;
        ReferenceMode reference;
    };
    const std::vector<ModeSpec> modes = {
        {"dynamic", TeamMode::dynamic_team, ReferenceMode::individual},
        {"static", TeamMode::static_team, ReferenceMode::individual},
        {"temporal", TeamMode::dynamic_team, ReferenceMode::temporal},
    };

    Table table;
    table.name = "modes";
    table.columns = {"mode",        "success_rate",        "steps_per_frame",
                     "steps_when_sampling", "fused_calls_per_frame", "individual_calls_per_frame",
                     "model_calls_per_frame", "ap50", "ap70"};

    std::vector<double> steps_per_frame, model_calls, individual_calls, success_rates;
    for (const auto& mode : modes) {
        auto worker = [&, mode](int repeat) {
            ScenarioConfig sc = opts.scenario;
            sc.attacker_count = attackers;
            sc.rng_seed = derive_seed(opts.seed, {kExpModes, static_cast<std::uint64_t>(repeat)});
            const Scene scene = generate_scene(sc);
            SimFusionModel model(sc);
            const auto bundles = make_all_bundles(scene);
            EngineConfig ec;
            ec.plan = plan;
            ec.consensus = default_consensus(sc, opts.epsilon);
            ec.team_mode = mode.team_mode;
            ec.reference = mode.reference;
            ec.rng_seed = sc.rng_seed;
            const SequenceResult result = robosac_sequence(bundles, model, ec);
            ModeAccum acc;
            acc.frames = static_cast<long long>(result.outcomes.size());
            acc.consensus_frames = result.stats.consensus_frames;
            acc.steps = result.stats.total_steps;
            acc.fused_calls = model.fused_calls();
            acc.individual_calls = model.individual_calls();
            for (const auto& outcome : result.outcomes) {
                if (outcome.steps_used > 0) ++acc.sampling_frames;
                acc.ap.add(evaluate_frame(
                    outcome,
                    scene.frames[static_cast<std::size_t>(outcome.frame_id)].ground_truth));
            }
            return acc;
        };
        ModeAccum total;
        for (const auto& acc : map_repeats<ModeAccum>(repeats, worker)) total.add(acc);

        const double frames = static_cast<double>(total.frames);
        const double rate = static_cast<double>(total.consensus_frames) / frames;
        const double spf = static_cast<double>(total.steps) / frames;
        const double sws = total.sampling_frames
                               ? static_cast<double>(total.steps) /
                                     static_cast<double>(total.sampling_frames)
                               : 0.0;
        const double fused_pf = static_cast<double>(total.fused_calls) / frames;
        const double ind_pf = static_cast<double>(total.individual_calls) / frames;
        table.rows.push_back({mode.label, fmt_rate(rate), fmt(spf, 4), fmt(sws, 4),
                              fmt(fused_pf, 4), fmt(ind_pf, 4), fmt(fused_pf + ind_pf, 4),
                              fmt_rate(total.ap.ap50()), fmt_rate(total.ap.ap70())});
        steps_per_frame.push_back(spf);
        model_calls.push_back(fused_pf + ind_pf);
        individual_calls.push_back(ind_pf);
        success_rates.push_back(rate);
    }

    table.assertions.push_back(check("modes/static_steps_below_dynamic",
                                     steps_per_frame[1] < steps_per_frame[0],
                                     "static=" + fmt(steps_per_frame[1], 4) +
                                         " dynamic=" + fmt(steps_per_frame[0], 4)));
    table.assertions.push_back(check("modes/temporal_fewer_model_calls",
                                     model_calls[2] < model_calls[0] &&
                                         individual_calls[2] < individual_calls[0],
                                     "temporal=" + fmt(model_calls[2], 4) +
                                         " individual_ref=" + fmt(model_calls[0], 4)));
    for (std::size_t m = 0; m < modes.size(); ++m)
        table.assertions.push_back(check(std::string("modes/") + modes[m].label + "_success_ge_0.9",
                                         success_rates[m] >= 0.9,
                                         "success=" + fmt_rate(success_rates[m])));
    return {table};
}

// ---------------------------------------------------------------- ablation

namespace {

struct DrawRecord {
    double distance = 0.0;
    bool clean = false;
    FrameAp fused_ap;
};

struct AblationCell {
    long long frames = 0;
    long long successes = 0;
    ApAccum ap;
};

}  // namespace

std::vector<Table> run_ablation_epsilon(const ExperimentOptions& opts) {
    const std::vector<double> epsilons = {0.1, 0.2, 0.3, 0.4, 0.5};
    const int repeats = opts.repeats > 0 ? opts.repeats : 5;
    const int team = opts.scenario.team_size;
    const int attackers = 1;
    const int sample = 3;
    const SamplingPlan plan = SamplingPlan::from_team(team, attackers, sample, opts.confidence);
    const long long budget = plan.budget;

    // Threshold sweep runs against a moderate mixed attack so that loose
    // thresholds demonstrably admit attacked fusions.
    const AttackConfig sweep_attack{AttackKind::mixed, 0.6};

    auto sweep_worker = [&](int repeat) {
        ScenarioConfig sc = opts.scenario;
        sc.attacker_count = attackers;
        sc.attack = sweep_attack;
        sc.rng_seed = derive_seed(opts.seed, {kExpAblation, 0, static_cast<std::uint64_t>(repeat)});
        const Scene scene = generate_scene(sc);
        SimFusionModel model(sc);
        const auto attacker_ids = scene.attacker_ids();

        std::vector<AblationCell> cells(epsilons.size());
        ConsensusConfig dcfg = default_consensus(sc, opts.epsilon);
        for (int t = 0; t < sc.frames; ++t) {
            const FrameBundle bundle = make_frame_bundle(scene, t);
            const DetectionSet& gt = scene.frames[static_cast<std::size_t>(t)].ground_truth;
            const DetectionSet individual = model.predict_individual(bundle.ego);
            const FrameAp individual_ap = evaluate_detections(individual, gt);

            // One fixed draw stream per frame; every epsilon replays the same
            // subsets and stops at its own first acceptance.
            Rng rng(derive_seed(sc.rng_seed, {0x61626c61ull, static_cast<std::uint64_t>(t)}));
            std::vector<DrawRecord> draws;
            draws.reserve(static_cast<std::size_t>(budget));
            for (long long n = 0; n < budget; ++n) {
                const auto indices = rng.subset(team, sample);
                std::vector<AgentMessage> selected;
                std::vector<int> ids;
                for (int idx : indices) {
                    selected.push_back(bundle.teammates[static_cast<std::size_t>(idx)]);
                    ids.push_back(selected.back().agent_id);
                }
                std::sort(ids.begin(), ids.end());
                const DetectionSet fused = model.predict_fused(bundle.ego, selected);
                DrawRecord record;
                record.distance = difference_measure(fused, individual, dcfg);
                record.clean = subset_is_clean(ids, attacker_ids);
                record.fused_ap = evaluate_detections(fused, gt);
                draws.push_back(record);
            }
            for (std::size_t e = 0; e < epsilons.size(); ++e) {
                ++cells[e].frames;
                bool accepted = false;
                for (const auto& draw : draws) {
                    if (draw.distance <= epsilons[e]) {
                        accepted = true;
                        if (draw.clean) ++cells[e].successes;
                        cells[e].ap.add(draw.fused_ap);
                        break;
                    }
                }
                if (!accepted) cells[e].ap.add(individual_ap);
            }
        }
        return cells;
    };

    std::vector<AblationCell> sweep(epsilons.size());
    for (const auto& cells : map_repeats<std::vector<AblationCell>>(repeats, sweep_worker)) {
        for (std::size_t e = 0; e < epsilons.size(); ++e) {
            sweep[e].frames += cells[e].frames;
            sweep[e].successes += cells[e].successes;
            sweep[e].ap.add(cells[e].ap);
        }
    }

    Table table;
    table.name = "ablation_epsilon";
    table.columns = {"cell", "epsilon", "attack", "severity", "success_rate", "ap50", "ap70"};
    std::vector<double> sweep_rates;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        const double rate =
            static_cast<double>(sweep[e].successes) / static_cast<double>(sweep[e].frames);
        sweep_rates.push_back(rate);
        table.rows.push_back({"threshold", fmt(epsilons[e], 2), "mixed",
                              fmt(sweep_attack.severity, 2), fmt_rate(rate),
                              fmt_rate(sweep[e].ap.ap50()), fmt_rate(sweep[e].ap.ap70())});
    }

    // Attack-kind sweep at the default threshold; two severities stand in
    // for attack strength settings.
    const std::vector<AttackKind> kinds = {AttackKind::fp_flood, AttackKind::mixed};
    const std::vector<double> severities = {0.6, 1.0};
    std::vector<std::vector<double>> kind_rates(severities.size());
    for (std::size_t sv = 0; sv < severities.size(); ++sv) {
        for (const auto kind : kinds) {
            auto worker = [&, kind, sv](int repeat) {
                ScenarioConfig sc = opts.scenario;
                sc.attacker_count = attackers;
                sc.attack = AttackConfig{kind, severities[sv]};
                sc.rng_seed = derive_seed(opts.seed, {kExpAblation, 1 + sv,
                                                      static_cast<std::uint64_t>(repeat)});
                const Scene scene = generate_scene(sc);
                SimFusionModel model(sc);
                const auto attacker_ids = scene.attacker_ids();
                EngineConfig ec;
                ec.plan = plan;
                ec.consensus = default_consensus(sc, opts.epsilon);
                ec.rng_seed = sc.rng_seed;
                AblationCell cell;
                for (int t = 0; t < sc.frames; ++t) {
                    const FrameBundle bundle = make_frame_bundle(scene, t);
                    const DetectionSet& gt =
                        scene.frames[static_cast<std::size_t>(t)].ground_truth;
                    Rng rng(derive_seed(ec.rng_seed, {0x6b696e64ull, static_cast<std::uint64_t>(t)}));
                    const RobosacOutcome outcome =
                        robosac_frame(bundle.ego, bundle.teammates, model, ec, rng);
                    ++cell.frames;
                    if (outcome.consensus_reached &&
                        subset_is_clean(outcome.accepted_teammates, attacker_ids))
                        ++cell.successes;
                    cell.ap.add(evaluate_frame(outcome, gt));
                }
                return cell;
            };
            AblationCell total;
            for (const auto& cell : map_repeats<AblationCell>(repeats, worker)) {
                total.frames += cell.frames;
                total.successes += cell.successes;
                total.ap.add(cell.ap);
            }
            const double rate =
                static_cast<double>(total.successes) / static_cast<double>(total.frames);
            kind_rates[sv].push_back(rate);
            table.rows.push_back({"attack_kind", fmt(opts.epsilon, 2), attack_kind_name(kind),
                                  fmt(severities[sv], 2), fmt_rate(rate),
                                  fmt_rate(total.ap.ap50()), fmt_rate(total.ap.ap70())});
        }
    }

    const double rate_eps3 = sweep_rates[2];
    table.assertions.push_back(check("ablation/eps0.3_success_ge_0.95", rate_eps3 >= 0.95,
                                     "rate=" + fmt_rate(rate_eps3)));
    table.assertions.push_back(check("ablation/eps0.5_le_eps0.3", sweep_rates[4] <= rate_eps3,
                                     "eps0.5=" + fmt_rate(sweep_rates[4]) +
                                         " eps0.3=" + fmt_rate(rate_eps3)));
    for (std::size_t sv = 0; sv < severities.size(); ++sv) {
        const double spread = std::abs(kind_rates[sv][0] - kind_rates[sv][1]);
        table.assertions.push_back(check(
            "ablation/kind_spread_lt_0.1_sev" + fmt(severities[sv], 2), spread < 0.1,
            "spread=" + fmt(spread, 3)));
    }

    // Where the clean and attacked d distributions separate for the sweep
    // scenario: thresholds inside this band are safe choices.
    ScenarioConfig band_cfg = opts.scenario;
    band_cfg.attacker_count = attackers;
    band_cfg.attack = sweep_attack;
    band_cfg.rng_seed = derive_seed(opts.seed, {kExpAblation, 99});
    const CalibrationReport band = calibrate_severity(band_cfg, opts.epsilon);
    Table band_table;
    band_table.name = "ablation_separation_band";
    band_table.columns = {"clean_q99", "attacked_q1", "band_contains_default_epsilon"};
    band_table.rows.push_back({fmt(band.clean_q99, 4), fmt(band.attacked_q1, 4),
                               band.pass ? "yes" : "no"});
    return {table, band_table};
}

// ---------------------------------------------------------------- calibration

std::vector<Table> run_calibration(const ExperimentOptions& opts) {
    Table table;
    table.name = "calibration";
    table.columns = {"label",  "attack",      "severity",    "verdict",
                     "clean_median", "clean_q99", "attacked_q1", "attacked_median"};

    auto add_row = [&](const std::string& label, AttackKind kind, double severity) {
        ScenarioConfig sc = opts.scenario;
        sc.attacker_count = std::max(1, sc.attacker_count);
        sc.attack = AttackConfig{kind, severity};
        const CalibrationReport report = calibrate_severity(sc, opts.epsilon);
        table.rows.push_back({label, attack_kind_name(kind), fmt(severity, 3), report.verdict,
                              fmt(report.clean_median, 4), fmt(report.clean_q99, 4),
                              fmt(report.attacked_q1, 4), fmt(report.attacked_median, 4)});
        return report;
    };

    const auto defaults = add_row("default", opts.scenario.attack.kind,
                                  opts.scenario.attack.severity);
    const auto zero = add_row("severity_zero", opts.scenario.attack.kind, 0.0);
    CalibrationReport subtle_low;
    bool have_low = false;
    for (double severity : {0.2, 0.4, 0.6, 0.8, 1.0, 1.2}) {
        const auto report = add_row("subtle_sweep", AttackKind::subtle, severity);
        if (severity == 0.4) {
            subtle_low = report;
            have_low = true;
        }
    }

    table.assertions.push_back(check("calibration/default_passes", defaults.pass,
                                     "clean_q99=" + fmt(defaults.clean_q99, 4) +
                                         " attacked_q1=" + fmt(defaults.attacked_q1, 4)));
    table.assertions.push_back(check("calibration/severity_zero_fails", !zero.pass,
                                     "attacked_q1=" + fmt(zero.attacked_q1, 4)));
    table.assertions.push_back(check("calibration/subtle_0.4_fails", have_low && !subtle_low.pass,
                                     "attacked_q1=" + fmt(subtle_low.attacked_q1, 4)));
    return {table};
}

}  // namespace robosac

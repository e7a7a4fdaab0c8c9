// Experiment runner. Subcommands map one-to-one onto the harness
// experiments; every run is deterministic given (--config, --seed).
// Exit codes: 0 all assertions pass, 1 assertion failure, 2 config error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "robosac/experiments.hpp"
#include "robosac/json_io.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::uint64_t seed = 20250811;
    int repeats = 0;
    std::string out_dir;
    std::string format = "csv";
    std::string command;
    std::string dump_scene_path;
};

robosac::ExperimentOptions build_options(const CliArgs& args) {
    robosac::ExperimentOptions opts;
    opts.seed = args.seed;
    opts.repeats = args.repeats;
    opts.out_dir = args.out_dir;
    if (args.format == "csv") {
        opts.format = robosac::OutputFormat::csv;
    } else if (args.format == "json") {
        opts.format = robosac::OutputFormat::json;
    } else {
        throw std::invalid_argument("--format must be csv or json");
    }
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw std::invalid_argument("cannot open config: " + args.config_path);
        nlohmann::json j;
        in >> j;
        if (j.contains("scenario")) opts.scenario = robosac::scenario_from_json(j.at("scenario"));
        if (j.contains("seed")) opts.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("repeats")) opts.repeats = j.at("repeats").get<int>();
        if (j.contains("confidence")) opts.confidence = j.at("confidence").get<double>();
        if (j.contains("epsilon")) opts.epsilon = j.at("epsilon").get<double>();
        if (args.repeats > 0) opts.repeats = args.repeats;  // flag wins
    }
    opts.scenario.rng_seed = opts.seed;
    return opts;
}

int report(const std::vector<robosac::Table>& tables, const robosac::ExperimentOptions& opts) {
    bool all_pass = true;
    for (const auto& table : tables) {
        robosac::write_table(table, opts);
        for (const auto& assertion : table.assertions) {
            std::printf("[%s] %s: %s\n", assertion.pass ? "PASS" : "FAIL",
                        assertion.name.c_str(), assertion.detail.c_str());
            all_pass = all_pass && assertion.pass;
        }
    }
    if (!opts.out_dir.empty()) {
        std::filesystem::create_directories(opts.out_dir);
        std::ofstream out(std::filesystem::path(opts.out_dir) / "summary.json");
        out << robosac::summary_json(tables).dump(2) << '\n';
    }
    std::printf("%s\n", all_pass ? "ALL CHECKS PASSED" : "CHECK FAILURES PRESENT");
    return all_pass ? 0 : 1;
}

void dump_scene(const robosac::ExperimentOptions& opts, const std::string& path) {
    const robosac::Scene scene = robosac::generate_scene(opts.scenario);
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write scene dump: " + path);
    for (const auto& frame : scene.frames)
        out << robosac::to_json(frame.ground_truth).dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sampling-consensus defense experiments for collaborative perception"};
    app.require_subcommand(1);
    app.fallthrough();

    CliArgs args;
    app.add_option("--config", args.config_path, "JSON experiment spec");
    app.add_option("--seed", args.seed, "master RNG seed");
    app.add_option("--repeats", args.repeats, "repeat count override");
    app.add_option("--out", args.out_dir, "output directory for tables + summary");
    app.add_option("--format", args.format, "table format: csv or json");

    auto* validate = app.add_subcommand("validate-bounds", "budget-table validation statistics");
    auto* tradeoff = app.add_subcommand("tradeoff", "budget/performance trade-off");
    auto* estimate = app.add_subcommand("estimate-ratio", "attacker-ratio estimation");
    auto* modes = app.add_subcommand("modes", "dynamic/static/temporal comparison");
    auto* ablation = app.add_subcommand("ablation-epsilon", "consensus-threshold ablation");
    auto* calibrate = app.add_subcommand("calibrate", "clean/attacked d-distribution gate");
    calibrate->add_option("--dump-scene", args.dump_scene_path,
                          "also write the ground-truth scene as JSON-lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        const robosac::ExperimentOptions opts = build_options(args);
        std::vector<robosac::Table> tables;
        if (validate->parsed()) {
            tables = robosac::run_validate_bounds(opts);
        } else if (tradeoff->parsed()) {
            tables = robosac::run_tradeoff(opts);
        } else if (estimate->parsed()) {
            tables = robosac::run_estimation(opts);
        } else if (modes->parsed()) {
            tables = robosac::run_modes(opts);
        } else if (ablation->parsed()) {
            tables = robosac::run_ablation_epsilon(opts);
        } else if (calibrate->parsed()) {
            if (!args.dump_scene_path.empty()) dump_scene(opts, args.dump_scene_path);
            tables = robosac::run_calibration(opts);
        }
        return report(tables, opts);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

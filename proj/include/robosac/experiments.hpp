// Desk-scale experiment harness: seeded, reproducible runs that produce the
// statistics tables (budget validation, performance/computation trade-off,
// ratio estimation, team modes, epsilon ablation, calibration) as CSV or
// JSON, with the closed-form prediction printed next to every empirical
// column and self-checking assertions on the statistical claims.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "robosac/engine.hpp"
#include "robosac/sim.hpp"

namespace robosac {

enum class OutputFormat { csv, json };

struct ExperimentOptions {
    std::uint64_t seed = 20250811;
    int repeats = 0;          // 0 = experiment default
    std::string out_dir;      // empty = no files written
    OutputFormat format = OutputFormat::csv;
    ScenarioConfig scenario;  // base scenario; experiments override the
                              // attacker count / attack per design
    double confidence = 0.99;
    double epsilon = 0.3;
};

struct Assertion {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<Assertion> assertions;

    bool all_pass() const;
};

std::string table_to_csv(const Table& table);
nlohmann::json table_to_json(const Table& table);
// Writes <out_dir>/<table.name>.{csv|json}; no-op when out_dir is empty.
void write_table(const Table& table, const ExperimentOptions& opts);
nlohmann::json summary_json(const std::vector<Table>& tables);

// Reproduces the budget-validation statistics: for each (eta, s) row at
// S = 5, N from the budget formula, sampling runs unbounded and a frame
// counts as success when consensus lands within N steps.
std::vector<Table> run_validate_bounds(const ExperimentOptions& opts);

// Success rate and detection AP at sampling budgets {1,3,5,7} with
// eta = 0.2, s = 3, plus individual / all-benign baselines and the
// budget-vs-AP curve for s = 1..4.
std::vector<Table> run_tradeoff(const ExperimentOptions& opts);

// Attacker-ratio estimation statistics over true ratios {0,.2,...,1.0} with
// grid [0,.2,.4,.6,.8] and a per-frame probe budget of 5.
std::vector<Table> run_estimation(const ExperimentOptions& opts);

// Dynamic vs static team and individual vs temporal reference comparison.
std::vector<Table> run_modes(const ExperimentOptions& opts);

// Consensus-threshold sweep and attack-kind sweep.
std::vector<Table> run_ablation_epsilon(const ExperimentOptions& opts);

// Calibration gate: clean/attacked d distributions for the default attack,
// a zero-severity control, and a severity sweep of the subtle attack.
std::vector<Table> run_calibration(const ExperimentOptions& opts);

// Consensus configuration used by every experiment: ego-FoV restricted
// difference measure around the ego position.
ConsensusConfig default_consensus(const ScenarioConfig& scenario, double epsilon);

}  // namespace robosac

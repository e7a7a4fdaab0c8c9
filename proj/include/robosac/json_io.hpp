// JSON wire formats:
//   DetectionSet      {"frame_id": n, "boxes": [{"x","y","l","w","yaw","score"}]}
//   outcome logs      JSON-lines, one record per frame
//   probe run report  {"true_ratio", "estimate", "frames_to_final", ...}
//   ScenarioConfig / EngineConfig round-trip for experiment specs.

#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "robosac/engine.hpp"
#include "robosac/geometry.hpp"
#include "robosac/ratio_probe.hpp"
#include "robosac/sim.hpp"

namespace robosac {

nlohmann::json to_json(const DetectionSet& set);
DetectionSet detection_set_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EngineConfig& cfg);
EngineConfig engine_from_json(const nlohmann::json& j);

// One JSON object per outcome: {"frame_id", "steps_used", "consensus",
// "accepted_ids", "d_values"}.
nlohmann::json outcome_record(const RobosacOutcome& outcome);
void write_outcome_log(std::ostream& out, const std::vector<RobosacOutcome>& outcomes);

nlohmann::json probe_run_report(const ProbeRunResult& run, double true_ratio);

std::string attack_kind_name(AttackKind kind);
AttackKind attack_kind_from_name(const std::string& name);

}  // namespace robosac

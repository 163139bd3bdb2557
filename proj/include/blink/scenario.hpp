#pragma once

#include "blink/simkit.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace blink {

/// Parses a scenario document. Every schema problem is appended to `errors` with
/// its field path; parsing continues past errors so all of them are reported.
ScenarioConfig scenario_from_json(const nlohmann::json& doc, std::vector<std::string>& errors);

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

struct ScenarioValidation {
    std::optional<ScenarioConfig> config;  // set only when errors is empty
    std::vector<std::string> errors;
};

/// Reads, parses and validates a scenario file.
ScenarioValidation validate_scenario(const std::filesystem::path& path);

/// Chain master - node0 - node2 - node1 with the measured inter-node distances of
/// the four reference geometries: indoor-los, indoor-nlos, outdoor, paper-sim.
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace blink

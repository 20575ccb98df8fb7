#pragma once

#include "ecm/scenario_tree.hpp"

#include <filesystem>
#include <string>

#include <json.hpp>

namespace ecm {

/// JSON document with `schedule`, `nodes` and `scenarios` sections. Doubles
/// are written with 17 significant digits so a read of a written tree
/// reproduces it exactly. Hours in the file are 1-based.
nlohmann::json tree_to_json(const ScenarioTree& tree);
ScenarioTree tree_from_json(const nlohmann::json& doc);

nlohmann::json schedule_to_json(const StageSchedule& schedule);
StageSchedule schedule_from_json(const nlohmann::json& doc);

nlohmann::json scenario_data_to_json(const ScenarioData& data);
ScenarioData scenario_data_from_json(const nlohmann::json& doc);

void write_tree(const ScenarioTree& tree, const std::filesystem::path& path);
ScenarioTree read_tree(const std::filesystem::path& path);

/// Shared helpers for the JSON files produced by the tools.
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

} // namespace ecm

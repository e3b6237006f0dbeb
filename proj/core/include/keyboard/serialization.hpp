#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "keyboard/combo_trial.hpp"
#include "keyboard/keyboard.hpp"
#include "keyboard/scenario.hpp"
#include "keyboard/simulation.hpp"

namespace keyboard {

using nlohmann::json;

/// Version tag written into every persisted TrialState document.
inline constexpr int kTrialStateSchemaVersion = 1;

void to_json(json& j, const DoseData& d);
void from_json(const json& j, DoseData& d);
void to_json(json& j, const DoseCoord& d);
void from_json(const json& j, DoseCoord& d);
void to_json(json& j, const HistoryEntry& h);
void from_json(const json& j, HistoryEntry& h);
void to_json(json& j, const TrialState& s);
void from_json(const json& j, TrialState& s);
void to_json(json& j, const MtdSelection& s);
void from_json(const json& j, MtdSelection& s);
void to_json(json& j, const TrialConfig& c);
void to_json(json& j, const DecisionTable& t);
void to_json(json& j, const ScenarioMetrics& m);
void from_json(const json& j, ScenarioMetrics& m);
void to_json(json& j, const StudyMetrics& m);
void from_json(const json& j, StudyMetrics& m);
void to_json(json& j, const TrialRecord& r);
void to_json(json& j, const ToxScenario& s);

/// Parses a trial configuration. Missing or mistyped fields are collected and
/// reported together as a ValidationError; so are range violations.
TrialConfig trial_config_from_json(const json& j);

/// Parses and validates a simulation spec document (see README for the schema).
SimSpec sim_spec_from_json(const json& j);
json sim_spec_to_json(const SimSpec& spec);

json study_to_json(const SimSpec& spec, const StudyResult& result);

/// Array of {"id", "rows", "cols", "phi", "mtd_location", "p_max", "mtd_count", "p"}.
json scenarios_to_json(const std::vector<ToxScenario>& scenarios, double eps1, double eps2);
/// One row per cell: scenario_id,j,k,p
std::string scenarios_csv(const std::vector<ToxScenario>& scenarios);

}  // namespace keyboard

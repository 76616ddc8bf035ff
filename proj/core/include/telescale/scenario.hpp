#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "telescale/clock.hpp"
#include "telescale/operators.hpp"
#include "telescale/plane.hpp"
#include "telescale/scaling.hpp"

namespace telescale {

/// One experimental condition: clock, scaling law, task and operator model.
/// All lengths are meters in memory; files may declare "units": "mm".
struct Scenario {
    std::string id = "default";
    double rate_hz = 1000.0;
    double round_trip_s = 0.0;
    ScalingStrategy scaling = ConstantScaling{};
    ProjectionMode projection = ProjectionMode::Verbatim;
    DistanceMode distance = DistanceMode::ProjectedPegs;
    TaskSetup task;
    OperatorConfig op = PursuitConfig{};
    PlanConfig plan;
    double timeout_s = 600.0;

    ClockConfig clock() const;
    OperatorContext operator_context() const;

    /// Throws ConfigError on any invalid field.
    void validate() const;
};

/// Peg-transfer board with pegs at (30,40), (30,60), (70,40), (70,60) mm.
TaskSetup default_task();

/// Constant 0.2, no delay, pursuit operator.
Scenario default_scenario();

/// Names accepted by builtin_scenario().
std::vector<std::string> builtin_scenario_names();

/// Throws ScenarioError for unknown names.
Scenario builtin_scenario(std::string_view name);

/// "preset5": const-0.3, const-0.2, const-0.1, positional, velocity.
std::vector<Scenario> preset_conditions(std::string_view name, double round_trip_s);

nlohmann::json scenario_to_json(const Scenario& scenario, std::string_view units = "mm");

/// Throws ScenarioError on schema violations and invalid values.
Scenario scenario_from_json(const nlohmann::json& doc);

/// Resolves a built-in name, an existing path, or a file on TELESCALE_SCENARIO_PATH.
Scenario load_scenario(std::string_view name_or_path);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path, std::string_view units = "mm");

nlohmann::json strategy_to_json(const ScalingStrategy& strategy);
ScalingStrategy strategy_from_json(const nlohmann::json& doc);

}  // namespace telescale

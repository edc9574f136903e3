#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "teleop/scenario.hpp"

namespace teleop::harness {

// Applies the keys of a JSON object on top of `base`. Unknown keys and bad
// values raise ConfigError naming the field. "scenario" and "controller" are
// handled by load_config and rejected here.
ScenarioConfig apply_config_json(ScenarioConfig base, const std::string& json_text);

// Reads a config file: the preset named by "scenario" (default custom) for
// "controller" (default iac), then every other key as an override. A given
// `scenario` or `controller` replaces the file's choice of preset.
ScenarioConfig load_config(const std::filesystem::path& path,
                           std::optional<ScenarioId> scenario = std::nullopt,
                           std::optional<ControllerKind> controller = std::nullopt);
ScenarioConfig parse_config(const std::string& json_text,
                            std::optional<ScenarioId> scenario = std::nullopt,
                            std::optional<ControllerKind> controller = std::nullopt);

// Full dump, accepted back by parse_config.
std::string config_to_json(const ScenarioConfig& config);

}  // namespace teleop::harness

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cav/feasibility.hpp"
#include "cav/simulator.hpp"

namespace cav {

/// Malformed or invalid scenario document. what() is prefixed with the
/// source name and, where known, the line: "cfg.json:7: ...".
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const SystemParams& params);
nlohmann::json to_json(const ScenarioConfig& config);

/// Parses a scenario document. Unknown keys and wrong types are rejected;
/// params.fez_length is derived from the speed band and u_B when omitted.
ScenarioConfig parse_config(std::string_view text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Applies "key=value" overrides to a parsed document before validation.
/// Keys are top-level fields, "params.<name>", or a bare parameter name.
/// With `validate` false only the document structure and types are checked.
ScenarioConfig parse_config(std::string_view text, const std::vector<std::string>& overrides,
                            const std::string& source = "<config>", bool validate = true);

/// %.9g, with "nan"/"inf" spelled out.
std::string format_number(double x);

std::string trajectories_csv(const SimLog& log);
std::string events_csv(const SimLog& log);
std::string gaps_csv(const SimLog& log);
std::string schedule_csv(const SimLog& log);
nlohmann::json profiles_json(const SimLog& log);
nlohmann::json fez_plans_json(const SimLog& log);

std::string raster_csv(const FeasibilityGrid& grid);
std::string boundary_csv(const FeasibilityGrid& grid);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace cav

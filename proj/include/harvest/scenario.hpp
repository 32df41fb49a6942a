#pragma once

#include <string>

#include "harvest/model.hpp"

namespace harvest {

constexpr int kSchemaVersion = 1;

// Throws ConfigError naming the offending key on any schema violation.
MissionConfig parse_scenario(const std::string& text);
MissionConfig load_scenario(const std::string& path);

}  // namespace harvest

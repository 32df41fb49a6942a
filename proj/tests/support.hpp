#pragma once

#include <string>

#include "harvest/scenario.hpp"

namespace harvest::testing {

inline std::string scenario_path(const std::string& name) { return std::string(HARVEST_SCENARIO_DIR) + "/" + name; }

inline MissionConfig case1() { return load_scenario(scenario_path("case1.json")); }

// one target, one agent, base far away
inline std::string lone_target_json(double range = 0.5, int steps = 4000) {
    return R"({"schema_version":1,"mission":{"L1":10,"L2":10},"horizon":10,"q":0.5,"agents":1,
        "base":{"position":[1,1],"range":0.5},
        "target_defaults":{"range":)" +
           std::to_string(range) + R"(,"mu":100,"beta":500,"arrival":{"mode":"constant","mean":0.5}},
        "targets":[{"position":[6,6]}],
        "integrator":{"steps":)" +
           std::to_string(steps) + "}}";
}

}  // namespace harvest::testing

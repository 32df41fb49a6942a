#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "harvest/objective.hpp"
#include "harvest/optimizer.hpp"
#include "harvest/simulator.hpp"
#include "harvest/trajectory.hpp"

namespace harvest {

constexpr const char* kToolVersion = "1.0.0";

// shortest round-trip text for a double
std::string fmt(double v);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

struct RunMetadata {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    int grid_nx = 0, grid_ny = 0;
    double step = 0;
    std::string family;
    int dim = 0;
};

void write_metadata(const std::string& path, const RunMetadata& m);

struct ThetaFile {
    Layout layout;
    std::vector<double> theta;
};
std::string theta_to_json(const Layout& L, const std::vector<double>& theta);
ThetaFile theta_from_json(const std::string& text, int agents);
ThetaFile load_theta(const std::string& path, int agents);

void write_trace_csv(const std::string& path, const MissionConfig& cfg, const Layout& L,
                     const std::vector<double>& theta, const SimTrace& tr);
void write_events_csv(const std::string& path, const SimTrace& tr);
void write_history_csv(const std::string& path, const std::vector<HistoryRow>& h);
void write_text(const std::string& path, const std::string& text);

}  // namespace harvest

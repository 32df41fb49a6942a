#pragma once

#include <cstdint>
#include <vector>

#include "harvest/ipa.hpp"
#include "harvest/objective.hpp"
#include "harvest/trajectory.hpp"

namespace harvest {

double step_size(int l, double eta0, double gamma);

struct OptimizerOptions {
    int iterations = 200;
    std::uint64_t seed = 1;
    double eta_length = 20.0;
    double eta_phase = 4.0;
    double eta_frequency = 0.5;
    double gamma = 0.602;
    // largest move of any single coordinate per iteration, by group
    double max_length_step = 0.25;
    double max_phase_step = 0.1;
    double max_frequency_step = 0.02;
    // caps shrink as (1 + l/offset)^-gamma; <= 0 keeps them fixed
    double cap_decay_offset = 10.0;
    int replications = 0;  // 0: 1 for deterministic arrivals, 4 for stochastic
    int jobs = 1;
    double g_tol = 1e-9;
    double c_tol = 1e-3;
    bool base_projection = true;  // ellipse: pull every iterate back onto C = 0
    IpaOptions ipa;
};

struct HistoryRow {
    int iter = 0;
    CostBreakdown cost;
    double grad_norm = 0;
    int valid_replications = 0;
};

struct Evaluation {
    CostBreakdown cost;  // mean over replications
    std::vector<double> grad;
    int valid = 0;
};

// Mean cost and IPA gradient over replications [first, first + count).
Evaluation evaluate(const CostContext& cc, const Layout& L, const std::vector<double>& theta, std::uint64_t first,
                    int count, int jobs, const IpaOptions& ipa = {});

struct OptimizeResult {
    std::vector<double> theta;
    std::vector<HistoryRow> history;  // one row per evaluated iterate, including the final one
};

std::vector<double> init_theta(const MissionConfig& cfg, const Layout& L, std::uint64_t seed);
void pull_onto_base(const MissionConfig& cfg, const Layout& L, std::vector<double>& theta);

OptimizeResult optimize(const CostContext& cc, const Layout& L, const std::vector<double>& theta0,
                        const OptimizerOptions& opt);

struct SegmentSearchResult {
    int segments = 1;
    std::vector<double> theta;
    double J = 0;
    std::vector<double> J_by_E;  // best J for E = 1, 2, ...
    OptimizeResult run;          // the returned solution's run
};

SegmentSearchResult segment_search(const CostContext& cc, int max_segments, const OptimizerOptions& opt,
                                   double improvement_eps = 1e-3);

int default_jobs();

}  // namespace harvest

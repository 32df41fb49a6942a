#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "harvest/field.hpp"
#include "harvest/simulator.hpp"

namespace harvest {

struct FdResult {
    std::vector<double> grad;     // estimate at the chosen step per component
    std::vector<double> best_h;   // step picked by the consistency residual
    std::vector<std::vector<double>> by_h;  // [h index][component]
    std::vector<double> hs;
    std::vector<char> flagged;    // some evaluation was non-finite
};

// Central differences over a step sweep. For each component the chosen step is the one whose
// estimate sits closest to its neighbours in the sweep.
FdResult fd_gradient(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& theta,
                     const std::vector<double>& hs = {1e-3, 1e-4, 1e-5});

struct McEstimate {
    double value = 0;
    double stderr_ = 0;
    int accepted = 0;
};

// Uniform rejection sampling inside the hull; value = area * mean(f).
McEstimate mc_field_integral(const HullPolygon& hull, const std::function<double(Vec2)>& f, int samples,
                             std::uint64_t seed);
// integrand R(w) for queue state X
McEstimate mc_field_integral(const MissionConfig& cfg, const HullPolygon& hull, const std::vector<double>& X,
                             int samples, std::uint64_t seed);

struct AuditResult {
    double max_abs = 0;      // max over trace nodes of |inflow - stored|
    double inflow_T = 0;     // total arrivals over [0, T]
    double relative = 0;     // max_abs / inflow_T
};

AuditResult conservation_audit(const MissionConfig& cfg, const SimTrace& tr);

}  // namespace harvest

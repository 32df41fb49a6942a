#pragma once

#include <vector>

#include "harvest/field.hpp"
#include "harvest/model.hpp"
#include "harvest/simulator.hpp"
#include "harvest/trajectory.hpp"

namespace harvest {

struct Normalizers {
    double MX = 1, MY = 1, MZ = 1, MI = 1, MR = 1;
};

Normalizers normalizers(const MissionConfig& cfg);

struct RunningCost {
    double L1 = 0, L2 = 0, L3 = 0, L4 = 0;
};

RunningCost running_cost(const MissionConfig& cfg, const FieldMoments& fm, const std::vector<double>& X,
                         const std::vector<double>& Y, const std::vector<double>& Z, const std::vector<Vec2>& s);

// Components are time averages of the raw running costs divided by their normalizers.
// J = q*J1 - (1-q)*J2 + J3 + J4 + Jf + penalty.
struct CostBreakdown {
    double J = 0, J1 = 0, J2 = 0, J3 = 0, J4 = 0, Jf = 0, penalty = 0;
};

// Everything needed to score a trace, built once per configuration.
struct CostContext {
    MissionConfig cfg;
    Normalizers nz;
    QuadratureGrid grid;
    FieldMoments fm;
    explicit CostContext(const MissionConfig& c);
};

double penalty(const CostContext& cc, const Layout& L, const std::vector<double>& theta);
CostBreakdown total_cost(const CostContext& cc, const Layout& L, const std::vector<double>& theta,
                         const SimTrace& tr);

}  // namespace harvest

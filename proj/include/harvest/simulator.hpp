#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "harvest/model.hpp"
#include "harvest/trajectory.hpp"

namespace harvest {

// Discrete mode, constant between consecutive trace nodes.
struct Mode {
    std::vector<int> owner;     // per target, -1 when unconnected
    std::vector<char> xclamp;   // X_i pinned at 0
    std::vector<char> zempty;   // Z_ij pinned at 0 while delivering
    std::vector<char> inrange;  // [i*N+j]
    std::vector<char> inbase;   // per agent
    std::vector<int> seg;       // active ellipse segment per agent
};

struct TraceNode {
    double t = 0;
    std::vector<double> rho, X, Y, Z;
    int mode = 0;  // applies on [t, next node)
};

struct SimTrace {
    std::vector<TraceNode> nodes;
    std::vector<Mode> modes;
    std::vector<EventRecord> events;
    Arrivals arrivals;
    int simultaneous = 0;  // events sharing an instant with another endogenous event
    int halvings = 0;
};

struct Flows {
    std::vector<double> rho, X, Z, Y;
};

// Proximity values and flows for given phases, time and mode.
struct Snapshot {
    std::vector<Vec2> s;
    std::vector<double> p, pB;  // p_ij (all pairs, geometric), p_Bj
};

class Simulator {
public:
    Simulator(const MissionConfig& cfg, const std::vector<AgentPath>& paths, const Arrivals& arr);

    SimTrace run() const;

    Snapshot snapshot(const std::vector<double>& rho, const Mode& m) const;
    // sigma_override < 0 uses the arrival realization
    Flows flows(double t, const std::vector<double>& rho, const Mode& m) const;

private:
    struct Guard {
        int type;  // 0 target range, 1 base range, 2 X free, 3 X clamped, 4 Z draining, 5 segment
        int i, j;
    };
    using State = std::vector<double>;

    State rk4(double t, const State& y, double h, const Mode& m) const;
    double guard_value(const Guard& g, double t, const State& y, const Mode& m) const;
    std::vector<double> guard_values(const std::vector<Guard>& gs, double t, const State& y, const Mode& m) const;
    std::vector<Guard> guards(const Mode& m) const;

    const MissionConfig& cfg_;
    const std::vector<AgentPath>& paths_;
    const Arrivals& arr_;
    int M_, N_;
};

SimTrace simulate(const MissionConfig& cfg, const Layout& L, const std::vector<double>& theta, const Arrivals& arr);

// Root of a guard crossing on (0, h]: f(0) <= 0 < f(h). Returns the bracket end on the crossed side.
double locate_crossing(const std::function<double(double)>& f, double h, double tol);

}  // namespace harvest

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace harvest {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }

struct TargetSpec {
    Vec2 pos;
    double alpha = 1.0;
    std::vector<double> range;  // r_ij, one per agent
    std::vector<double> mu;     // mu_ij, one per agent
};

struct BaseSpec {
    Vec2 pos;
    std::vector<double> range;             // r_Bj
    std::vector<std::vector<double>> beta; // beta_ij, [target][agent]
};

struct ArrivalSpec {
    enum class Mode { constant, piecewise_linear };
    Mode mode = Mode::constant;
    double mean = 0.5;
    double amplitude = 1.0;  // node spread as a fraction of the mean
    double delta = 0.0;      // breakpoint spacing, 0 -> T/20
    std::uint64_t seed = 1;
};

struct MissionConfig {
    double L1 = 10.0;
    double L2 = 10.0;
    std::vector<TargetSpec> targets;
    BaseSpec base;
    int N = 1;
    double T = 20.0;
    double q = 0.5;
    std::vector<ArrivalSpec> arrivals;
    double MC = 1e4;
    int grid_nx = 50;
    int grid_ny = 50;
    int steps = 20000;
    double event_tol = 1e-10;  // relative to T
    std::vector<double> X0;    // optional initial queues
    std::string name;

    int M() const { return static_cast<int>(targets.size()); }
    double step() const { return T / steps; }
    // r_i = min_j r_ij
    double target_radius(int i) const;
    double base_radius() const;
    void validate() const;
};

double proximity(Vec2 w, Vec2 v, double r);
double d_plus(double d, double r);
double idling(Vec2 s, int j, const MissionConfig& cfg);

// Realized arrival rates for one sample path.
class Arrivals {
public:
    Arrivals() = default;
    Arrivals(const MissionConfig& cfg, std::uint64_t replication);

    double sigma(int i, double t) const;
    double sigma_dot(int i, double t) const;
    // integral of sigma_i over [0,t]
    double cumulative(int i, double t) const;
    // sorted breakpoints where some rate changes slope (exogenous events)
    const std::vector<double>& breakpoints() const { return breaks_; }
    bool stochastic() const { return stochastic_; }

private:
    struct Path {
        double dt = 0.0;
        std::vector<double> nodes;
    };
    std::vector<Path> paths_;
    std::vector<double> breaks_;
    bool stochastic_ = false;
    double T_ = 0.0;
};

enum class EventKind { xi0, xi_plus, zeta0, delta_plus, delta0, Delta_plus, Delta0, kappa, segment };

const char* kind_name(EventKind k);
bool is_endogenous(EventKind k);

struct EventRecord {
    double t = 0.0;
    EventKind kind = EventKind::kappa;
    int i = -1;
    int j = -1;
    int node = -1;         // trace node where the event is applied
    int handoff = -1;      // agent taking over a target on delta+
    bool induced = false;  // implied by another event at the same instant
    // snapshots at the event instant
    std::vector<double> p;      // p_ij, row-major [i*N+j]
    std::vector<double> pB;     // p_Bj
    std::vector<double> sigma;  // sigma_i
    std::vector<double> sigma_dot;
    std::vector<double> flow_pre;   // X rates then Z rates
    std::vector<double> flow_post;
};

}  // namespace harvest

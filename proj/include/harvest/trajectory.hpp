#pragma once

#include <array>
#include <string>
#include <vector>

#include "harvest/model.hpp"

namespace harvest {

enum class Family { ellipse, fourier };

const char* family_name(Family f);
Family parse_family(const std::string& s);

struct EllipseSegment {
    double A = 0, B = 0, a = 1, b = 1, phi = 0;
};

struct FourierParams {
    double fx = 1.0;
    std::vector<double> a, phx, b, phy;
};

enum class ParamGroup { length, phase, frequency };

struct AgentBlock {
    int offset = 0;
    int count = 0;
    int segments = 1;  // ellipse
    int gx = 0, gy = 0;  // fourier
};

// Flat parameter layout. Ellipse segment: [A, B, a, b, phi].
// Fourier agent: [fx, a_1..a_gx, phx_1..phx_gx, b_1..b_gy, phy_1..phy_gy].
class Layout {
public:
    static Layout ellipse(const std::vector<int>& segments);
    static Layout fourier(int agents, int gx, int gy);

    Family family() const { return family_; }
    int dim() const { return dim_; }
    int agents() const { return static_cast<int>(blocks_.size()); }
    const AgentBlock& block(int j) const { return blocks_[j]; }
    int agent_of(int k) const;
    std::string name(int k) const;
    ParamGroup group(int k) const;

private:
    Family family_ = Family::ellipse;
    int dim_ = 0;
    std::vector<AgentBlock> blocks_;
};

EllipseSegment get_segment(const Layout& L, const std::vector<double>& theta, int j, int seg);
void set_segment(const Layout& L, std::vector<double>& theta, int j, int seg, const EllipseSegment& e);
FourierParams get_fourier(const Layout& L, const std::vector<double>& theta, int j);
void set_fourier(const Layout& L, std::vector<double>& theta, int j, const FourierParams& f);

// raw ellipse curve at angle th (no phase origin shift)
Vec2 ellipse_point(const EllipseSegment& e, double th);
// d s / d(A,B,a,b,phi) at fixed th
std::array<Vec2, 5> ellipse_jacobian(const EllipseSegment& e, double th);
// angle of the base-passage point (normalized-coordinate angle of w_B) and its gradient
double phase_origin(const EllipseSegment& e, Vec2 wB, std::array<double, 5>* grad = nullptr);
double ellipse_perimeter(const EllipseSegment& e);

struct BaseConstraint {
    double value = 0;
    std::array<double, 5> grad{};
    double residual = 0;  // the quantity squared in value
};
BaseConstraint base_constraint(const EllipseSegment& e, Vec2 wB);
// Gauss-Newton pull of the segment onto {C = 0}; returns false if it failed to converge
bool project_onto_base(EllipseSegment& e, Vec2 wB, double amax, double L1, double L2);

struct PathPoint {
    Vec2 s;   // position
    Vec2 g;   // ds/drho
    Vec2 gg;  // d2s/drho2
    int col0 = 0;  // first global column of the active block
    int ncol = 0;
    std::vector<Vec2> sp;  // ds/dp at fixed rho
    std::vector<Vec2> gp;  // d(ds/drho)/dp at fixed rho
};

class AgentPath {
public:
    AgentPath() = default;
    AgentPath(const Layout& L, const std::vector<double>& theta, int j, Vec2 wB);

    Family family() const { return family_; }
    int segments() const { return static_cast<int>(segs_.size()); }
    int agent() const { return agent_; }
    // seg is the active ellipse segment (ignored for fourier)
    void eval(double rho, int seg, PathPoint& out, bool jac) const;
    Vec2 position(double rho, int seg) const;
    double rho_dot(double rho, int seg) const;
    Vec2 velocity(double rho, int seg) const;
    // phase where segment seg ends; +inf for the last one
    double segment_end(int seg) const;

private:
    Family family_ = Family::ellipse;
    int agent_ = 0;
    int offset_ = 0;
    Vec2 wB_;
    std::vector<EllipseSegment> segs_;
    std::vector<double> th0_;
    std::vector<std::array<double, 5>> dth0_;
    FourierParams f_;
    double a0_ = 0, b0_ = 0;
};

std::vector<AgentPath> build_paths(const Layout& L, const std::vector<double>& theta, Vec2 wB);

// completion times of each segment at unit speed
std::vector<double> segment_schedule(const std::vector<EllipseSegment>& segs);

struct Feasibility {
    double ab_min = 0.1;
    double ab_max = 10.0;
    double L1 = 10.0, L2 = 10.0;
    double f_min = 0.2, f_max = 5.0;
    double amp_max = 10.0;
};
Feasibility feasibility_for(const MissionConfig& cfg);
void project(const Layout& L, std::vector<double>& theta, const Feasibility& F);
bool feasible(const Layout& L, const std::vector<double>& theta, const Feasibility& F);

constexpr double kEpsCurve = 1e-8;
constexpr double kEpsSpeed = 1e-6;

}  // namespace harvest

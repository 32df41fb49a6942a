#pragma once

#include <functional>
#include <vector>

#include "harvest/model.hpp"

namespace harvest {

struct HullPolygon {
    std::vector<Vec2> v;  // counter-clockwise
    bool degenerate = false;
    double area() const;
    bool contains(Vec2 w) const;
};

HullPolygon convex_hull(std::vector<Vec2> pts);

// R(w) over target queues X
double field_R(const MissionConfig& cfg, Vec2 w, const std::vector<double>& X);
// R_Bj(w); Z is the full row-major [i*N+j] table
double field_RB(const MissionConfig& cfg, Vec2 w, const std::vector<double>& Z, int j);
double travel_cost(Vec2 w, Vec2 s);

struct QuadratureGrid {
    int nx = 50, ny = 50;
    double L1 = 10, L2 = 10;
    QuadratureGrid() = default;
    QuadratureGrid(int nx_, int ny_, double L1_, double L2_) : nx(nx_), ny(ny_), L1(L1_), L2(L2_) {}
    double weight() const { return (L1 / nx) * (L2 / ny); }
    Vec2 cell(int ix, int iy) const { return {(ix + 0.5) * L1 / nx, (iy + 0.5) * L2 / ny}; }
};

// Grid moments of 1/d+ per source (targets 0..M-1, base M) so that
// sum_cells |s-w|^2 / d+(w) * weight = |s|^2 K0 - 2 s.K1 + K2 exactly as a grid sum.
class FieldMoments {
public:
    FieldMoments() = default;
    FieldMoments(const MissionConfig& cfg, const QuadratureGrid& grid);
    double G(int src, Vec2 s) const;
    Vec2 dG(int src, Vec2 s) const;
    int sources() const { return static_cast<int>(K0_.size()); }

private:
    std::vector<double> K0_, K2_;
    std::vector<Vec2> K1_;
};

// sum_j sum_cells (R + R_Bj) P_j weight
double quadrature_J4(const MissionConfig& cfg, const FieldMoments& fm, const std::vector<double>& X,
                     const std::vector<double>& Z, const std::vector<Vec2>& s);
// same quantity by a plain cell loop
double quadrature_J4_direct(const MissionConfig& cfg, const QuadratureGrid& grid, const std::vector<double>& X,
                            const std::vector<double>& Z, const std::vector<Vec2>& s);

// integral over the hull of f by masked midpoint quadrature on an n x n grid over the hull's bounding box
double hull_integral(const HullPolygon& hull, const std::function<double(Vec2)>& f, int n);

// c_i = alpha_i * integral over hull of 1/d_i+(w)
double compute_ci(const MissionConfig& cfg, int i, const HullPolygon& hull, int n = 1000);
double compute_ci(Vec2 target, double r, double alpha, const HullPolygon& hull, int n = 1000);

// disk of radius Lambda centred on the target.
// log form: 2 pi (1 + ln(Lambda/r)), integrates 1/d+ against dr dtheta (no polar Jacobian)
// area form: the area integral of 1/d+, 2 pi (Lambda - r/2)
double ci_disk_log_form(double Lambda, double r, double alpha = 1.0);
double ci_disk_area_form(double Lambda, double r, double alpha = 1.0);

}  // namespace harvest

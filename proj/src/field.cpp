#include "harvest/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace harvest {

namespace {

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

}  // namespace

double HullPolygon::area() const {
    double acc = 0;
    const size_t n = v.size();
    for (size_t k = 0; k < n; ++k) {
        const Vec2 a = v[k], b = v[(k + 1) % n];
        acc += a.x * b.y - a.y * b.x;
    }
    return 0.5 * acc;
}

bool HullPolygon::contains(Vec2 w) const {
    if (degenerate) return false;
    const size_t n = v.size();
    for (size_t k = 0; k < n; ++k)
        if (cross(v[k], v[(k + 1) % n], w) < 0) return false;
    return true;
}

HullPolygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    HullPolygon h;
    if (pts.size() < 3) {
        h.v = pts;
        h.degenerate = true;
        return h;
    }
    bool flat = true;
    for (size_t i = 2; i < pts.size() && flat; ++i) flat = cross(pts[0], pts[1], pts[i]) == 0;
    if (flat) {
        h.v = {pts.front(), pts.back()};
        h.degenerate = true;
        return h;
    }
    // boundary points on an edge are kept as vertices
    std::vector<Vec2> H(2 * pts.size());
    size_t k = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(H[k - 2], H[k - 1], pts[i]) < 0) --k;
        H[k++] = pts[i];
    }
    for (size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(H[k - 2], H[k - 1], pts[i - 1]) < 0) --k;
        H[k++] = pts[i - 1];
    }
    H.resize(k - 1);
    h.v = H;
    h.degenerate = H.size() < 3;
    return h;
}

double field_R(const MissionConfig& cfg, Vec2 w, const std::vector<double>& X) {
    double acc = 0;
    for (int i = 0; i < cfg.M(); ++i)
        acc += cfg.targets[i].alpha * X[i] / std::max(dist(w, cfg.targets[i].pos), cfg.target_radius(i));
    return acc;
}

double field_RB(const MissionConfig& cfg, Vec2 w, const std::vector<double>& Z, int j) {
    double load = 0;
    for (int i = 0; i < cfg.M(); ++i) load += cfg.targets[i].alpha * Z[i * cfg.N + j];
    return load / std::max(dist(w, cfg.base.pos), cfg.base_radius());
}

double travel_cost(Vec2 w, Vec2 s) {
    const Vec2 d = s - w;
    return dot(d, d);
}

FieldMoments::FieldMoments(const MissionConfig& cfg, const QuadratureGrid& grid) {
    const int M = cfg.M();
    K0_.assign(M + 1, 0.0);
    K2_.assign(M + 1, 0.0);
    K1_.assign(M + 1, Vec2{0, 0});
    const double wt = grid.weight();
    for (int src = 0; src <= M; ++src) {
        const Vec2 c = src < M ? cfg.targets[src].pos : cfg.base.pos;
        const double r = src < M ? cfg.target_radius(src) : cfg.base_radius();
        double k0 = 0, k2 = 0;
        Vec2 k1{0, 0};
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const Vec2 w = grid.cell(ix, iy);
                const double inv = wt / std::max(dist(w, c), r);
                k0 += inv;
                k1 = k1 + inv * w;
                k2 += inv * dot(w, w);
            }
        K0_[src] = k0;
        K1_[src] = k1;
        K2_[src] = k2;
    }
}

double FieldMoments::G(int src, Vec2 s) const { return dot(s, s) * K0_[src] - 2.0 * dot(s, K1_[src]) + K2_[src]; }

Vec2 FieldMoments::dG(int src, Vec2 s) const { return 2.0 * K0_[src] * s - 2.0 * K1_[src]; }

double quadrature_J4(const MissionConfig& cfg, const FieldMoments& fm, const std::vector<double>& X,
                     const std::vector<double>& Z, const std::vector<Vec2>& s) {
    const int M = cfg.M();
    double acc = 0;
    for (int j = 0; j < cfg.N; ++j) {
        double load = 0;
        for (int i = 0; i < M; ++i) {
            acc += cfg.targets[i].alpha * X[i] * fm.G(i, s[j]);
            load += cfg.targets[i].alpha * Z[i * cfg.N + j];
        }
        acc += load * fm.G(M, s[j]);
    }
    return acc;
}

double quadrature_J4_direct(const MissionConfig& cfg, const QuadratureGrid& grid, const std::vector<double>& X,
                            const std::vector<double>& Z, const std::vector<Vec2>& s) {
    double acc = 0;
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 w = grid.cell(ix, iy);
            const double R = field_R(cfg, w, X);
            for (int j = 0; j < cfg.N; ++j) acc += (R + field_RB(cfg, w, Z, j)) * travel_cost(w, s[j]);
        }
    return acc * grid.weight();
}

double hull_integral(const HullPolygon& hull, const std::function<double(Vec2)>& f, int n) {
    if (hull.degenerate) throw ConfigError("hull is degenerate (fewer than three non-collinear targets)");
    double x0 = hull.v[0].x, x1 = x0, y0 = hull.v[0].y, y1 = y0;
    for (auto p : hull.v) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const double hx = (x1 - x0) / n, hy = (y1 - y0) / n;
    double acc = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
            const Vec2 w{x0 + (ix + 0.5) * hx, y0 + (iy + 0.5) * hy};
            if (hull.contains(w)) acc += f(w);
        }
    return acc * hx * hy;
}

double compute_ci(Vec2 target, double r, double alpha, const HullPolygon& hull, int n) {
    return alpha * hull_integral(hull, [&](Vec2 w) { return 1.0 / std::max(dist(w, target), r); }, n);
}

double compute_ci(const MissionConfig& cfg, int i, const HullPolygon& hull, int n) {
    return compute_ci(cfg.targets[i].pos, cfg.target_radius(i), cfg.targets[i].alpha, hull, n);
}

double ci_disk_log_form(double Lambda, double r, double alpha) {
    return alpha * 2.0 * std::numbers::pi * (1.0 + std::log(Lambda / r));
}

double ci_disk_area_form(double Lambda, double r, double alpha) {
    if (Lambda <= r) return alpha * std::numbers::pi * Lambda * Lambda / r;
    return alpha * 2.0 * std::numbers::pi * (Lambda - 0.5 * r);
}

}  // namespace harvest

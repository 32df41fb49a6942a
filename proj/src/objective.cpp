#include "harvest/objective.hpp"

#include <cmath>

namespace harvest {

Normalizers normalizers(const MissionConfig& cfg) {
    double sig0 = 0, rbar = 0;
    for (int i = 0; i < cfg.M(); ++i) {
        const auto& a = cfg.arrivals[i];
        if (!(a.mean > 0)) throw ConfigError("target " + std::to_string(i) + ": initial arrival rate must be positive");
        sig0 += a.mean;
        rbar += cfg.target_radius(i);
    }
    rbar /= cfg.M();
    Normalizers n;
    n.MX = n.MY = n.MZ = cfg.T * sig0;
    n.MI = std::log1p(std::pow(std::hypot(cfg.L1, cfg.L2), cfg.M() + 1));
    n.MR = cfg.T * cfg.L1 * cfg.L2 * (cfg.L1 * cfg.L1 + cfg.L2 * cfg.L2) / rbar * sig0;
    return n;
}

RunningCost running_cost(const MissionConfig& cfg, const FieldMoments& fm, const std::vector<double>& X,
                         const std::vector<double>& Y, const std::vector<double>& Z, const std::vector<Vec2>& s) {
    RunningCost c;
    for (int i = 0; i < cfg.M(); ++i) {
        c.L1 += cfg.targets[i].alpha * X[i];
        c.L2 += cfg.targets[i].alpha * Y[i];
    }
    for (int j = 0; j < cfg.N; ++j) c.L3 += idling(s[j], j, cfg);
    c.L4 = quadrature_J4(cfg, fm, X, Z, s);
    return c;
}

CostContext::CostContext(const MissionConfig& c)
    : cfg(c), nz(normalizers(c)), grid(c.grid_nx, c.grid_ny, c.L1, c.L2), fm(c, grid) {}

double penalty(const CostContext& cc, const Layout& L, const std::vector<double>& theta) {
    if (L.family() != Family::ellipse) return 0.0;
    double acc = 0;
    for (int j = 0; j < L.agents(); ++j)
        for (int k = 0; k < L.block(j).segments; ++k)
            acc += base_constraint(get_segment(L, theta, j, k), cc.cfg.base.pos).value;
    return cc.cfg.MC * acc;
}

CostBreakdown total_cost(const CostContext& cc, const Layout& L, const std::vector<double>& theta,
                         const SimTrace& tr) {
    const auto& cfg = cc.cfg;
    const auto paths = build_paths(L, theta, cfg.base.pos);
    const int N = cfg.N;
    auto positions = [&](const TraceNode& nd, const Mode& m) {
        std::vector<Vec2> s(N);
        for (int j = 0; j < N; ++j) s[j] = paths[j].position(nd.rho[j], m.seg[j]);
        return s;
    };
    double I1 = 0, I2 = 0, I3 = 0, I4 = 0;
    for (size_t k = 0; k + 1 < tr.nodes.size(); ++k) {
        const auto& a = tr.nodes[k];
        const auto& b = tr.nodes[k + 1];
        const double dt = b.t - a.t;
        if (dt <= 0) continue;
        const Mode& m = tr.modes[a.mode];
        const auto ca = running_cost(cfg, cc.fm, a.X, a.Y, a.Z, positions(a, m));
        const auto cb = running_cost(cfg, cc.fm, b.X, b.Y, b.Z, positions(b, m));
        I1 += 0.5 * dt * (ca.L1 + cb.L1);
        I2 += 0.5 * dt * (ca.L2 + cb.L2);
        I3 += 0.5 * dt * (ca.L3 + cb.L3);
        I4 += 0.5 * dt * (ca.L4 + cb.L4);
    }
    const auto& nz = cc.nz;
    CostBreakdown c;
    c.J1 = I1 / (cfg.T * nz.MX);
    c.J2 = I2 / (cfg.T * nz.MY);
    c.J3 = I3 / (cfg.T * nz.MI);
    c.J4 = I4 / (cfg.T * nz.MR);
    double zt = 0;
    const auto& last = tr.nodes.back();
    for (int i = 0; i < cfg.M(); ++i)
        for (int j = 0; j < N; ++j) zt += cfg.targets[i].alpha * last.Z[i * N + j];
    c.Jf = zt / (nz.MZ * cfg.T);
    c.penalty = penalty(cc, L, theta);
    c.J = cfg.q * c.J1 - (1 - cfg.q) * c.J2 + c.J3 + c.J4 + c.Jf + c.penalty;
    return c;
}

}  // namespace harvest

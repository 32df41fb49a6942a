#include "harvest/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace harvest {

FdResult fd_gradient(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& theta,
                     const std::vector<double>& hs) {
    if (hs.empty()) throw std::invalid_argument("empty step sweep");
    const size_t D = theta.size(), H = hs.size();
    FdResult r;
    r.hs = hs;
    r.grad.assign(D, 0.0);
    r.best_h.assign(D, hs.front());
    r.flagged.assign(D, 0);
    r.by_h.assign(H, std::vector<double>(D, 0.0));
    auto x = theta;
    for (size_t k = 0; k < D; ++k) {
        for (size_t q = 0; q < H; ++q) {
            x[k] = theta[k] + hs[q];
            const double fp = f(x);
            x[k] = theta[k] - hs[q];
            const double fm = f(x);
            x[k] = theta[k];
            const double d = (fp - fm) / (2 * hs[q]);
            if (!std::isfinite(d)) r.flagged[k] = 1;
            r.by_h[q][k] = d;
        }
        size_t best = 0;
        double res = std::numeric_limits<double>::infinity();
        for (size_t q = 0; q < H; ++q) {
            double rq = std::numeric_limits<double>::infinity();
            if (q > 0) rq = std::min(rq, std::abs(r.by_h[q][k] - r.by_h[q - 1][k]));
            if (q + 1 < H) rq = std::min(rq, std::abs(r.by_h[q][k] - r.by_h[q + 1][k]));
            if (H == 1) rq = 0;
            if (rq < res) {
                res = rq;
                best = q;
            }
        }
        r.grad[k] = r.by_h[best][k];
        r.best_h[k] = hs[best];
    }
    return r;
}

McEstimate mc_field_integral(const HullPolygon& hull, const std::function<double(Vec2)>& f, int samples,
                             std::uint64_t seed) {
    if (hull.degenerate || hull.v.size() < 3) throw std::invalid_argument("degenerate hull");
    if (samples < 2) throw std::invalid_argument("need at least two samples");
    double x0 = hull.v[0].x, x1 = x0, y0 = hull.v[0].y, y1 = y0;
    for (const auto& p : hull.v) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    std::mt19937_64 rng(seed);
    auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    double sum = 0, sum2 = 0;
    McEstimate e;
    while (e.accepted < samples) {
        const Vec2 w{x0 + (x1 - x0) * u(), y0 + (y1 - y0) * u()};
        if (!hull.contains(w)) continue;
        const double v = f(w);
        sum += v;
        sum2 += v * v;
        ++e.accepted;
    }
    const double n = e.accepted, mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * mean * mean) / (n - 1));
    const double A = hull.area();
    e.value = A * mean;
    e.stderr_ = A * std::sqrt(var / n);
    return e;
}

McEstimate mc_field_integral(const MissionConfig& cfg, const HullPolygon& hull, const std::vector<double>& X,
                             int samples, std::uint64_t seed) {
    return mc_field_integral(hull, [&](Vec2 w) { return field_R(cfg, w, X); }, samples, seed);
}

AuditResult conservation_audit(const MissionConfig& cfg, const SimTrace& tr) {
    AuditResult a;
    const int M = cfg.M();
    double x0 = 0;
    for (double v : cfg.X0) x0 += v;
    for (const auto& nd : tr.nodes) {
        double in = x0, stored = 0;
        for (int i = 0; i < M; ++i) in += tr.arrivals.cumulative(i, nd.t);
        for (double v : nd.X) stored += v;
        for (double v : nd.Z) stored += v;
        for (double v : nd.Y) stored += v;
        a.max_abs = std::max(a.max_abs, std::abs(in - stored));
    }
    for (int i = 0; i < M; ++i) a.inflow_T += tr.arrivals.cumulative(i, cfg.T);
    a.relative = a.inflow_T > 0 ? a.max_abs / a.inflow_T : a.max_abs;
    return a;
}

}  // namespace harvest

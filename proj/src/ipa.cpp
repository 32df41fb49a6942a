#include "harvest/ipa.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace harvest {

DerivativeState::DerivativeState(const Layout& L, int M_, int N_) : dim(L.dim()), M(M_), N(N_) {
    X.assign(static_cast<size_t>(M) * dim, 0.0);
    Y.assign(static_cast<size_t>(M) * dim, 0.0);
    Z.assign(static_cast<size_t>(M) * N * dim, 0.0);
    rho.resize(N_);
    for (int j = 0; j < N_; ++j) rho[j].assign(L.block(j).count, 0.0);
}

void jump_xi0(DerivativeState& d, int i, int j) {
    double* x = d.Xr(i);
    double* z = d.Zr(i, j);
    for (int k = 0; k < d.dim; ++k) {
        z[k] += x[k];
        x[k] = 0.0;
    }
}

void jump_zeta0(DerivativeState& d, int i, int j) {
    double* z = d.Zr(i, j);
    double* y = d.Yr(i);
    for (int k = 0; k < d.dim; ++k) {
        y[k] += z[k];
        z[k] = 0.0;
    }
}

void jump_handoff(DerivativeState& d, int i, int l, double mu_p, const double* tau, int col0, int n) {
    double* x = d.Xr(i);
    double* z = d.Zr(i, l);
    for (int k = 0; k < n; ++k) {
        x[col0 + k] += mu_p * tau[k];
        z[col0 + k] -= mu_p * tau[k];
    }
}

double tau_prime_queue(double xprime, double flow_pre) { return -xprime / flow_pre; }

double tau_prime_range(Vec2 u, Vec2 sprime, Vec2 sdot) { return -dot(u, sprime) / dot(u, sdot); }

namespace {

// agent geometry at one instant, derivatives over the agent's own block
struct Geo {
    Vec2 s, g, gg;
    double rd = 0;  // rho dot
    int off = 0, n = 0;
    std::vector<Vec2> ds;     // total ds/dtheta including the rho sensitivity
    std::vector<double> drp;  // d(rho')/dt
};

struct Walk {
    const CostContext& cc;
    const MissionConfig& cfg;
    const Layout& L;
    const std::vector<double>& theta;
    const SimTrace& tr;
    IpaOptions opt;
    std::vector<AgentPath> paths;
    int M, N, D;

    Walk(const CostContext& c, const Layout& l, const std::vector<double>& th, const SimTrace& t, const IpaOptions& o)
        : cc(c), cfg(c.cfg), L(l), theta(th), tr(t), opt(o), paths(build_paths(l, th, c.cfg.base.pos)),
          M(c.cfg.M()), N(c.cfg.N), D(l.dim()) {}

    Geo geo(int j, double rho, int seg, const std::vector<double>& rp) const {
        PathPoint pp;
        paths[j].eval(rho, seg, pp, true);
        const double gn = norm(pp.g);
        if (gn < kEpsCurve) throw SingularityError("degenerate curve point for agent " + std::to_string(j));
        Geo G;
        G.s = pp.s;
        G.g = pp.g;
        G.gg = pp.gg;
        G.rd = 1.0 / gn;
        G.off = L.block(j).offset;
        G.n = L.block(j).count;
        G.ds.assign(G.n, Vec2{});
        G.drp.assign(G.n, 0.0);
        const double g3 = gn * gn * gn;
        for (int k = 0; k < G.n; ++k) {
            G.ds[k] = rp[k] * pp.g;
            G.drp[k] = -dot(pp.g, rp[k] * pp.gg) / g3;
        }
        const int c0 = pp.col0 - G.off;
        for (int c = 0; c < pp.ncol; ++c) {
            G.ds[c0 + c] = G.ds[c0 + c] + pp.sp[c];
            G.drp[c0 + c] -= dot(pp.g, pp.gp[c]) / g3;
        }
        if (!opt.rho_sensitivity) std::fill(G.drp.begin(), G.drp.end(), 0.0);
        return G;
    }

    std::vector<Geo> geos(const std::vector<double>& rho, const Mode& m, const DerivativeState& d) const {
        std::vector<Geo> out;
        for (int j = 0; j < N; ++j) out.push_back(geo(j, rho[j], m.seg[j], d.rho[j]));
        return out;
    }

    // X', Z', Y' rates scaled by w, from p' along the current mode
    void forcing(const Mode& m, const std::vector<Geo>& G, double w, DerivativeState& d) const {
        for (int i = 0; i < M; ++i) {
            const int o = m.owner[i];
            if (o < 0 || m.xclamp[i]) continue;
            const auto& tg = cfg.targets[i];
            const Vec2 v = G[o].s - tg.pos;
            const double dd = norm(v), r = tg.range[o];
            if (dd == 0) continue;  // range membership is the mode's, stages may touch the boundary
            const Vec2 u = (1.0 / dd) * v;
            const double c = w * tg.mu[o] / r;
            double* x = d.Xr(i) + G[o].off;
            double* z = d.Zr(i, o) + G[o].off;
            for (int k = 0; k < G[o].n; ++k) {
                const double f = c * dot(u, G[o].ds[k]);  // -mu p'
                x[k] += f;
                z[k] -= f;
            }
        }
        for (int j = 0; j < N; ++j) {
            if (!m.inbase[j]) continue;
            const Vec2 v = G[j].s - cfg.base.pos;
            const double dd = norm(v), r = cfg.base.range[j];
            if (dd == 0) continue;
            const Vec2 u = (1.0 / dd) * v;
            for (int i = 0; i < M; ++i) {
                if (m.owner[i] == j || m.zempty[i * N + j]) continue;
                const double c = w * cfg.base.beta[i][j] / r;
                double* z = d.Zr(i, j) + G[j].off;
                double* y = d.Yr(i) + G[j].off;
                for (int k = 0; k < G[j].n; ++k) {
                    const double f = c * dot(u, G[j].ds[k]);  // -beta pB'
                    z[k] += f;
                    y[k] -= f;
                }
            }
        }
    }

    // normalized running-cost gradient integrand
    void integrand(const TraceNode& nd, const Mode& m, const std::vector<Geo>& G, const DerivativeState& d,
                   std::vector<double>& out) const {
        const auto& nz = cc.nz;
        const auto& fm = cc.fm;
        out.assign(D, 0.0);
        for (int i = 0; i < M; ++i) {
            const double al = cfg.targets[i].alpha;
            double cx = cfg.q * al / nz.MX;
            for (int j = 0; j < N; ++j) cx += al * fm.G(i, G[j].s) / nz.MR;
            const double cy = -(1 - cfg.q) * al / nz.MY;
            const double* x = d.X.data() + static_cast<size_t>(i) * D;
            const double* y = d.Y.data() + static_cast<size_t>(i) * D;
            for (int k = 0; k < D; ++k) out[k] += cx * x[k] + cy * y[k];
            for (int j = 0; j < N; ++j) {
                const double cz = al * fm.G(M, G[j].s) / nz.MR;
                const double* z = d.Z.data() + static_cast<size_t>(i * N + j) * D;
                for (int k = 0; k < D; ++k) out[k] += cz * z[k];
            }
        }
        for (int j = 0; j < N; ++j) {
            Vec2 v = (1.0 / nz.MI) * idling_grad(G[j].s, j, m);
            for (int i = 0; i < M; ++i) {
                const double al = cfg.targets[i].alpha;
                v = v + (al * nd.X[i] / nz.MR) * fm.dG(i, G[j].s) + (al * nd.Z[i * N + j] / nz.MR) * fm.dG(M, G[j].s);
            }
            for (int k = 0; k < G[j].n; ++k) out[G[j].off + k] += dot(v, G[j].ds[k]);
        }
    }

    // range membership comes from the mode, so event nodes get the one-sided value of the interval
    Vec2 idling_grad(Vec2 s, int j, const Mode& m) const {
        std::vector<Vec2> c{cfg.base.pos};
        std::vector<double> r{cfg.base.range[j]};
        std::vector<char> in{m.inbase[j]};
        for (int i = 0; i < M; ++i) {
            c.push_back(cfg.targets[i].pos);
            r.push_back(cfg.targets[i].range[j]);
            in.push_back(m.inrange[i * N + j]);
        }
        std::vector<double> dp(c.size());
        double prod = 1;
        for (size_t q = 0; q < c.size(); ++q) {
            dp[q] = in[q] ? 0.0 : dist(s, c[q]) - r[q];
            prod *= dp[q];
        }
        Vec2 g{};
        for (size_t q = 0; q < c.size(); ++q) {
            if (in[q]) continue;
            double others = 1;
            for (size_t o = 0; o < c.size(); ++o)
                if (o != q) others *= dp[o];
            const Vec2 v = s - c[q];
            g = g + (others / norm(v)) * v;
        }
        return (1.0 / (1.0 + prod)) * g;
    }

    // sum of normalized running costs (the part that can jump when positions jump)
    double lagrangian(const TraceNode& nd, const std::vector<Vec2>& s) const {
        const auto rc = running_cost(cfg, cc.fm, nd.X, nd.Y, nd.Z, s);
        const auto& nz = cc.nz;
        return cfg.q * rc.L1 / nz.MX - (1 - cfg.q) * rc.L2 / nz.MY + rc.L3 / nz.MI + rc.L4 / nz.MR;
    }

    // queue flows with the arrival-rate terms removed; exact for differences between modes
    // that agree on clamping
    void flows_no_sigma(const Mode& m, const Mode& clamp, const std::vector<Vec2>& s, std::vector<double>& fx,
                        std::vector<double>& fz, std::vector<double>& fy) const {
        fx.assign(M, 0.0);
        fz.assign(M * N, 0.0);
        fy.assign(M, 0.0);
        for (int i = 0; i < M; ++i) {
            const int o = m.owner[i];
            if (o < 0 || clamp.xclamp[i]) continue;
            const auto& tg = cfg.targets[i];
            const double up = tg.mu[o] * std::max(0.0, 1.0 - dist(s[o], tg.pos) / tg.range[o]);
            fx[i] -= up;
            fz[i * N + o] += up;
        }
        for (int j = 0; j < N; ++j) {
            if (!m.inbase[j]) continue;
            const double pB = std::max(0.0, 1.0 - dist(s[j], cfg.base.pos) / cfg.base.range[j]);
            for (int i = 0; i < M; ++i) {
                if (m.owner[i] == j || m.zempty[i * N + j]) continue;
                const double r = cfg.base.beta[i][j] * pB;
                fz[i * N + j] -= r;
                fy[i] += r;
            }
        }
    }

    using Hook = std::function<void(int node, const std::vector<Geo>& G, const DerivativeState& d)>;

    GradientResult run(const Hook& hook) const {
        GradientResult res;
        res.grad.assign(D, 0.0);
        DerivativeState d(L, M, N);
        const double T = cfg.T;
        std::vector<std::vector<int>> at(tr.nodes.size());
        for (size_t e = 0; e < tr.events.size(); ++e)
            if (tr.events[e].node >= 0) at[tr.events[e].node].push_back(static_cast<int>(e));

        const double c[4] = {0.0, 0.5, 0.5, 1.0};
        const double w[4] = {1.0 / 6, 2.0 / 6, 2.0 / 6, 1.0 / 6};
        std::vector<double> Ga, Gb;
        try {
            for (size_t b = 1; b < tr.nodes.size(); ++b) {
                const auto& na = tr.nodes[b - 1];
                const auto& nb = tr.nodes[b];
                const Mode& m = tr.modes[na.mode];
                const double h = nb.t - na.t;
                if (h > 0) {
                    integrand(na, m, geos(na.rho, m, d), d, Ga);
                    // RK4 for rho and rho'; X', Z', Y' forcing by the same stage weights
                    std::vector<double> krho(N, 0.0), rho(N);
                    std::vector<std::vector<double>> krp(N), rp0 = d.rho, rpacc = d.rho;
                    for (int j = 0; j < N; ++j) krp[j].assign(d.rho[j].size(), 0.0);
                    DerivativeState st = d;
                    for (int s = 0; s < 4; ++s) {
                        for (int j = 0; j < N; ++j) {
                            rho[j] = na.rho[j] + c[s] * h * krho[j];
                            for (size_t k = 0; k < rp0[j].size(); ++k)
                                st.rho[j][k] = rp0[j][k] + c[s] * h * krp[j][k];
                        }
                        const auto G = geos(rho, m, st);
                        forcing(m, G, h * w[s], d);
                        for (int j = 0; j < N; ++j) {
                            krho[j] = G[j].rd;
                            krp[j] = G[j].drp;
                            for (size_t k = 0; k < rpacc[j].size(); ++k) rpacc[j][k] += h * w[s] * krp[j][k];
                        }
                    }
                    d.rho = rpacc;
                    const auto Gend = geos(nb.rho, m, d);
                    integrand(nb, m, Gend, d, Gb);
                    for (int k = 0; k < D; ++k) res.grad[k] += 0.5 * h * (Ga[k] + Gb[k]) / T;
                }
                if (at[b].empty()) continue;
                const Mode& post = tr.modes[nb.mode];
                const auto Gpre = geos(nb.rho, m, d);
                if (hook) hook(static_cast<int>(b), Gpre, d);
                apply_events(at[b], nb, m, post, Gpre, d, res);
                if (!res.valid) return res;
            }
        } catch (const SingularityError& e) {
            res.valid = false;
            res.reason = e.what();
            return res;
        }
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) {
                const double cz = cfg.targets[i].alpha / (cc.nz.MZ * T);
                const double* z = d.Zr(i, j);
                for (int k = 0; k < D; ++k) res.grad[k] += cz * z[k];
            }
        if (L.family() == Family::ellipse) {
            for (int j = 0; j < N; ++j)
                for (int s = 0; s < L.block(j).segments; ++s) {
                    const auto bc = base_constraint(get_segment(L, theta, j, s), cfg.base.pos);
                    for (int k = 0; k < 5; ++k) res.grad[L.block(j).offset + 5 * s + k] += cfg.MC * bc.grad[k];
                }
        }
        res.final_state = std::move(d);
        return res;
    }

    void apply_events(const std::vector<int>& ids, const TraceNode& nb, const Mode& pre, const Mode& post,
                      const std::vector<Geo>& G, DerivativeState& d, GradientResult& res) const {
        int segj = -1;
        for (int e : ids)
            if (tr.events[e].kind == EventKind::segment) {
                segj = tr.events[e].j;
                break;
            }
        if (segj >= 0) {
            const auto Gpost = geos(nb.rho, post, d);
            std::vector<Vec2> spre(N), spost(N);
            for (int j = 0; j < N; ++j) {
                spre[j] = G[j].s;
                spost[j] = Gpost[j].s;
            }
            const Geo& g0 = G[segj];
            std::vector<double> tau(g0.n);
            for (int k = 0; k < g0.n; ++k) tau[k] = -d.rho[segj][k] / g0.rd;
            std::vector<double> ax, az, ay, bx, bz, by;
            flows_no_sigma(pre, pre, spre, ax, az, ay);
            flows_no_sigma(post, pre, spost, bx, bz, by);
            const int off = g0.off;
            for (int k = 0; k < g0.n; ++k) {
                for (int i = 0; i < M; ++i) {
                    d.Xr(i)[off + k] += (ax[i] - bx[i]) * tau[k];
                    d.Yr(i)[off + k] += (ay[i] - by[i]) * tau[k];
                    for (int j = 0; j < N; ++j) d.Zr(i, j)[off + k] += (az[i * N + j] - bz[i * N + j]) * tau[k];
                }
            }
            const double dl = (lagrangian(nb, spre) - lagrangian(nb, spost)) / cfg.T;
            for (int k = 0; k < g0.n; ++k) res.grad[off + k] += dl * tau[k];
            const double ratio = Gpost[segj].rd / g0.rd;
            for (auto& v : d.rho[segj]) v *= ratio;
        }
        for (int id : ids) {
            const auto& e = tr.events[id];
            switch (e.kind) {
                case EventKind::xi0: {
                    const int o = e.j >= 0 ? e.j : (post.owner[e.i] >= 0 ? post.owner[e.i] : pre.owner[e.i]);
                    if (o >= 0) jump_xi0(d, e.i, o);
                    break;
                }
                case EventKind::zeta0: jump_zeta0(d, e.i, e.j); break;
                case EventKind::delta_plus:
                case EventKind::delta0:
                case EventKind::Delta_plus:
                case EventKind::Delta0: {
                    if (segj >= 0 || e.induced) break;
                    const Geo& g = G[e.j];
                    const Vec2 ctr = (e.kind == EventKind::Delta_plus || e.kind == EventKind::Delta0)
                                         ? cfg.base.pos
                                         : cfg.targets[e.i].pos;
                    const Vec2 v = g.s - ctr;
                    const Vec2 u = (1.0 / norm(v)) * v;
                    const double den = dot(u, g.rd * g.g);
                    if (std::abs(den) < opt.grazing) {
                        res.valid = false;
                        res.reason = std::string("grazing ") + kind_name(e.kind) + " event at t=" + std::to_string(e.t);
                        return;
                    }
                    if (e.kind == EventKind::delta_plus && e.handoff >= 0) {
                        const int l = e.handoff;
                        const auto& tg = cfg.targets[e.i];
                        const double p = std::max(0.0, 1.0 - dist(G[l].s, tg.pos) / tg.range[l]);
                        std::vector<double> tau(g.n);
                        for (int k = 0; k < g.n; ++k) tau[k] = tau_prime_range(u, g.ds[k], g.rd * g.g);
                        jump_handoff(d, e.i, l, tg.mu[l] * p, tau.data(), g.off, g.n);
                    }
                    break;
                }
                default: break;
            }
        }
    }
};

}  // namespace

GradientResult assemble_gradient(const CostContext& cc, const Layout& L, const std::vector<double>& theta,
                                 const SimTrace& tr, const IpaOptions& opt) {
    Walk w(cc, L, theta, tr, opt);
    return w.run(nullptr);
}

std::vector<std::vector<double>> event_time_derivatives(const CostContext& cc, const Layout& L,
                                                        const std::vector<double>& theta, const SimTrace& tr,
                                                        const IpaOptions& opt) {
    Walk w(cc, L, theta, tr, opt);
    const int D = L.dim();
    const auto& cfg = cc.cfg;
    std::vector<std::vector<double>> rows(tr.events.size(),
                                          std::vector<double>(D, std::numeric_limits<double>::quiet_NaN()));
    auto hook = [&](int node, const std::vector<Geo>& G, const DerivativeState& d) {
        for (size_t id = 0; id < tr.events.size(); ++id) {
            const auto& e = tr.events[id];
            if (e.node != node) continue;
            auto& row = rows[id];
            std::fill(row.begin(), row.end(), 0.0);
            auto geometric = [&](Vec2 ctr) {
                const Geo& g = G[e.j];
                const Vec2 v = g.s - ctr;
                const Vec2 u = (1.0 / norm(v)) * v;
                for (int k = 0; k < g.n; ++k) row[g.off + k] = tau_prime_range(u, g.ds[k], g.rd * g.g);
            };
            switch (e.kind) {
                case EventKind::kappa: break;
                case EventKind::xi0:
                    for (int k = 0; k < D; ++k) row[k] = tau_prime_queue(d.Xr(e.i)[k], e.flow_pre[e.i]);
                    break;
                case EventKind::zeta0:
                    for (int k = 0; k < D; ++k)
                        row[k] = d.Zr(e.i, e.j)[k] / (cfg.base.beta[e.i][e.j] * e.pB[e.j]);
                    break;
                case EventKind::xi_plus: {
                    const int o = tr.modes[tr.nodes[node - 1].mode].owner[e.i];
                    if (o < 0) break;
                    const auto& tg = cfg.targets[e.i];
                    const Geo& g = G[o];
                    const Vec2 v = g.s - tg.pos;
                    const double dd = norm(v), r = tg.range[o];
                    if (!(dd < r)) break;
                    const Vec2 u = (1.0 / dd) * v;
                    const double pdot = -dot(u, g.rd * g.g) / r;
                    const double den = e.sigma_dot[e.i] - tg.mu[o] * pdot;
                    for (int k = 0; k < g.n; ++k) row[g.off + k] = tg.mu[o] * (-dot(u, g.ds[k]) / r) / den;
                    break;
                }
                case EventKind::delta_plus:
                case EventKind::delta0: geometric(cfg.targets[e.i].pos); break;
                case EventKind::Delta_plus:
                case EventKind::Delta0: geometric(cfg.base.pos); break;
                case EventKind::segment: {
                    const Geo& g = G[e.j];
                    for (int k = 0; k < g.n; ++k) row[g.off + k] = -d.rho[e.j][k] / g.rd;
                    break;
                }
            }
        }
    };
    w.run(hook);
    return rows;
}

}  // namespace harvest

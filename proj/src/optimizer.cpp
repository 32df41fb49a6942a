#include "harvest/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace harvest {

namespace {

constexpr double kPi = 3.14159265358979323846;

double uniform(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

Vec2 centroid(const MissionConfig& cfg) {
    Vec2 c{};
    for (const auto& t : cfg.targets) c = c + t.pos;
    return (1.0 / cfg.M()) * c;
}

struct RepOut {
    CostBreakdown cost;
    GradientResult g;
};

RepOut run_replication(const CostContext& cc, const Layout& L, const std::vector<double>& theta, std::uint64_t rep,
                       const IpaOptions& ipa) {
    RepOut out;
    try {
        const Arrivals arr(cc.cfg, rep);
        const auto tr = simulate(cc.cfg, L, theta, arr);
        out.cost = total_cost(cc, L, theta, tr);
        out.g = assemble_gradient(cc, L, theta, tr, ipa);
    } catch (const SingularityError& e) {
        out.cost.J = std::numeric_limits<double>::quiet_NaN();
        out.g.valid = false;
        out.g.reason = e.what();
    }
    return out;
}

}  // namespace

int default_jobs() {
    if (const char* s = std::getenv("HARVEST_OPT_JOBS")) {
        const int v = std::atoi(s);
        if (v > 0) return v;
    }
    return 1;
}

double step_size(int l, double eta0, double gamma) { return eta0 / std::pow(1.0 + l, gamma); }

Evaluation evaluate(const CostContext& cc, const Layout& L, const std::vector<double>& theta, std::uint64_t first,
                    int count, int jobs, const IpaOptions& ipa) {
    std::vector<RepOut> outs(count);
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int r = 0; r < count; ++r) outs[r] = run_replication(cc, L, theta, first + r, ipa);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                for (int r = w; r < count; r += jobs) outs[r] = run_replication(cc, L, theta, first + r, ipa);
            });
        for (auto& t : pool) t.join();
    }
    Evaluation ev;
    ev.grad.assign(L.dim(), 0.0);
    int nc = 0;
    for (const auto& o : outs) {
        if (std::isfinite(o.cost.J)) {
            ev.cost.J += o.cost.J;
            ev.cost.J1 += o.cost.J1;
            ev.cost.J2 += o.cost.J2;
            ev.cost.J3 += o.cost.J3;
            ev.cost.J4 += o.cost.J4;
            ev.cost.Jf += o.cost.Jf;
            ev.cost.penalty += o.cost.penalty;
            ++nc;
        }
        if (!o.g.valid) continue;
        for (int k = 0; k < L.dim(); ++k) ev.grad[k] += o.g.grad[k];
        ++ev.valid;
    }
    if (nc == 0) throw SingularityError("every replication hit a singular trajectory");
    for (double* v : {&ev.cost.J, &ev.cost.J1, &ev.cost.J2, &ev.cost.J3, &ev.cost.J4, &ev.cost.Jf, &ev.cost.penalty})
        *v /= nc;
    if (ev.valid > 0)
        for (auto& g : ev.grad) g /= ev.valid;
    return ev;
}

void pull_onto_base(const MissionConfig& cfg, const Layout& L, std::vector<double>& theta) {
    if (L.family() != Family::ellipse) return;
    const auto F = feasibility_for(cfg);
    for (int j = 0; j < L.agents(); ++j)
        for (int k = 0; k < L.block(j).segments; ++k) {
            auto e = get_segment(L, theta, j, k);
            project_onto_base(e, cfg.base.pos, F.ab_max, cfg.L1, cfg.L2);
            set_segment(L, theta, j, k, e);
        }
}

std::vector<double> init_theta(const MissionConfig& cfg, const Layout& L, std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
    const Vec2 wB = cfg.base.pos;
    const Vec2 c = centroid(cfg);
    const double R0 = 0.25 * std::min(cfg.L1, cfg.L2);
    const double psi0 = (dist(c, wB) > 1e-9) ? std::atan2(c.y - wB.y, c.x - wB.x) : 0.0;
    std::vector<double> theta(L.dim(), 0.0);
    for (int j = 0; j < L.agents(); ++j) {
        const double psi = psi0 + 0.6 * (uniform(rng) - 0.5);
        const double R = R0 * (0.9 + 0.2 * uniform(rng));
        if (L.family() == Family::ellipse) {
            for (int k = 0; k < L.block(j).segments; ++k) {
                const double ps = psi + (k == 0 ? 0.0 : 0.8 * (uniform(rng) - 0.5));
                EllipseSegment e;
                const Vec2 m = 0.5 * (wB + c);
                e.A = m.x + 0.2 * (uniform(rng) - 0.5) * R;
                e.B = m.y + 0.2 * (uniform(rng) - 0.5) * R;
                e.a = R * (1.0 + 0.1 * (uniform(rng) - 0.5));
                e.b = R * (1.0 + 0.1 * (uniform(rng) - 0.5));
                e.phi = ps;
                set_segment(L, theta, j, k, e);
            }
        } else {
            const auto& b = L.block(j);
            FourierParams f;
            f.fx = 1.0;
            f.a.assign(b.gx, 0.0);
            f.phx.assign(b.gx, 0.0);
            f.b.assign(b.gy, 0.0);
            f.phy.assign(b.gy, 0.0);
            // circle through the base, centred towards the targets
            f.a[0] = R;
            f.b[0] = R;
            f.phx[0] = psi - 0.5 * kPi;
            f.phy[0] = psi + kPi;
            for (int n = 1; n < b.gx; ++n) {
                f.a[n] = 0.1 * (uniform(rng) - 0.5);
                f.phx[n] = 2 * kPi * uniform(rng);
            }
            for (int n = 1; n < b.gy; ++n) {
                f.b[n] = 0.1 * (uniform(rng) - 0.5);
                f.phy[n] = 2 * kPi * uniform(rng);
            }
            set_fourier(L, theta, j, f);
        }
    }
    project(L, theta, feasibility_for(cfg));
    pull_onto_base(cfg, L, theta);
    return theta;
}

OptimizeResult optimize(const CostContext& cc, const Layout& L, const std::vector<double>& theta0,
                        const OptimizerOptions& opt) {
    const auto& cfg = cc.cfg;
    const auto F = feasibility_for(cfg);
    const bool stoch = Arrivals(cfg, 0).stochastic();
    const int R = opt.replications > 0 ? opt.replications : (stoch ? 4 : 1);
    OptimizeResult res;
    res.theta = theta0;
    std::vector<double> prev(L.dim(), 0.0);
    for (int l = 0;; ++l) {
        // deterministic arrivals reuse replication 0; stochastic ones draw a fresh batch each iteration
        const std::uint64_t first = stoch ? opt.seed * 1000003ULL + static_cast<std::uint64_t>(l) * R : 0;
        const Evaluation ev = evaluate(cc, L, res.theta, first, R, opt.jobs, opt.ipa);
        std::vector<double> g = ev.valid > 0 ? ev.grad : prev;
        double gn = 0;
        for (double v : g) {
            if (!std::isfinite(v)) throw std::runtime_error("non-finite gradient at iteration " + std::to_string(l));
            gn += v * v;
        }
        gn = std::sqrt(gn);
        res.history.push_back({l, ev.cost, gn, ev.valid});
        if (l >= opt.iterations) break;
        if (gn < opt.g_tol && ev.cost.penalty < opt.c_tol) break;
        const double shrink = opt.cap_decay_offset > 0 ? std::pow(1.0 + l / opt.cap_decay_offset, -opt.gamma) : 1.0;
        for (int k = 0; k < L.dim(); ++k) {
            double eta = opt.eta_length, cap = opt.max_length_step;
            switch (L.group(k)) {
                case ParamGroup::phase:
                    eta = opt.eta_phase;
                    cap = opt.max_phase_step;
                    break;
                case ParamGroup::frequency:
                    eta = opt.eta_frequency;
                    cap = opt.max_frequency_step;
                    break;
                default: break;
            }
            cap *= shrink;
            const double d = std::clamp(step_size(l, eta, opt.gamma) * g[k], -cap, cap);
            res.theta[k] -= d;
        }
        project(L, res.theta, F);
        if (opt.base_projection) pull_onto_base(cfg, L, res.theta);
        prev = g;
    }
    return res;
}

SegmentSearchResult segment_search(const CostContext& cc, int max_segments, const OptimizerOptions& opt,
                                   double improvement_eps) {
    const auto& cfg = cc.cfg;
    SegmentSearchResult best;
    std::vector<double> prev_theta;
    for (int E = 1; E <= max_segments; ++E) {
        const Layout L = Layout::ellipse(std::vector<int>(cfg.N, E));
        std::vector<double> theta0;
        if (E == 1) {
            theta0 = init_theta(cfg, L, opt.seed);
        } else {
            // copy the previous solution; the new last segment leans towards the heaviest remaining backlog
            const Layout Lp = Layout::ellipse(std::vector<int>(cfg.N, E - 1));
            theta0.assign(L.dim(), 0.0);
            const Arrivals arr(cfg, 0);
            const auto tr = simulate(cfg, Lp, prev_theta, arr);
            int heavy = 0;
            for (int i = 1; i < cfg.M(); ++i)
                if (cfg.targets[i].alpha * tr.nodes.back().X[i] > cfg.targets[heavy].alpha * tr.nodes.back().X[heavy])
                    heavy = i;
            for (int j = 0; j < cfg.N; ++j) {
                for (int k = 0; k < E - 1; ++k) set_segment(L, theta0, j, k, get_segment(Lp, prev_theta, j, k));
                auto e = get_segment(Lp, prev_theta, j, E - 2);
                const Vec2 to = cfg.targets[heavy].pos - Vec2{e.A, e.B};
                e.A += 0.3 * to.x;
                e.B += 0.3 * to.y;
                set_segment(L, theta0, j, E - 1, e);
            }
            project(L, theta0, feasibility_for(cfg));
            pull_onto_base(cfg, L, theta0);
        }
        auto run = optimize(cc, L, theta0, opt);
        const double J = run.history.back().cost.J;
        best.J_by_E.push_back(J);
        if (E == 1 || J < best.J - improvement_eps) {
            best.segments = E;
            best.theta = run.theta;
            best.J = J;
            best.run = std::move(run);
            prev_theta = best.theta;
        } else {
            break;
        }
    }
    return best;
}

}  // namespace harvest

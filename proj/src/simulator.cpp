#include "harvest/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace harvest {

namespace {

int priority(EventKind k) {
    switch (k) {
        case EventKind::segment: return 0;
        case EventKind::delta_plus:
        case EventKind::delta0:
        case EventKind::Delta_plus:
        case EventKind::Delta0: return 1;
        case EventKind::xi0:
        case EventKind::xi_plus:
        case EventKind::zeta0: return 2;
        case EventKind::kappa: return 3;
    }
    return 4;
}

}  // namespace

double locate_crossing(const std::function<double(double)>& f, double h, double tol) {
    double lo = 0, hi = h;
    double flo = f(lo), fhi = f(hi);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm > 0) {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    // Illinois steps inside the bracket
    int side = 0;
    for (int it = 0; it < 30 && hi - lo > 1e-15 * h; ++it) {
        if (!(fhi > flo)) break;
        double x = lo - flo * (hi - lo) / (fhi - flo);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        const double fx = f(x);
        if (fx > 0) {
            hi = x;
            fhi = fx;
            if (side == 1) flo *= 0.5;
            side = 1;
        } else {
            lo = x;
            flo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        }
    }
    return hi;
}

Simulator::Simulator(const MissionConfig& cfg, const std::vector<AgentPath>& paths, const Arrivals& arr)
    : cfg_(cfg), paths_(paths), arr_(arr), M_(cfg.M()), N_(cfg.N) {}

Snapshot Simulator::snapshot(const std::vector<double>& rho, const Mode& m) const {
    Snapshot sn;
    sn.s.resize(N_);
    sn.p.assign(M_ * N_, 0.0);
    sn.pB.assign(N_, 0.0);
    for (int j = 0; j < N_; ++j) {
        sn.s[j] = paths_[j].position(rho[j], m.seg[j]);
        sn.pB[j] = std::max(0.0, 1.0 - dist(sn.s[j], cfg_.base.pos) / cfg_.base.range[j]);
        for (int i = 0; i < M_; ++i)
            sn.p[i * N_ + j] = std::max(0.0, 1.0 - dist(sn.s[j], cfg_.targets[i].pos) / cfg_.targets[i].range[j]);
    }
    return sn;
}

Flows Simulator::flows(double t, const std::vector<double>& rho, const Mode& m) const {
    Flows f;
    f.rho.resize(N_);
    f.X.assign(M_, 0.0);
    f.Z.assign(M_ * N_, 0.0);
    f.Y.assign(M_, 0.0);
    std::vector<Vec2> s(N_);
    PathPoint pp;
    for (int j = 0; j < N_; ++j) {
        paths_[j].eval(rho[j], m.seg[j], pp, false);
        const double n = norm(pp.g);
        if (n < kEpsCurve)
            throw SingularityError("degenerate curve point for agent " + std::to_string(j) + " segment " +
                                   std::to_string(m.seg[j]));
        f.rho[j] = 1.0 / n;
        s[j] = pp.s;
    }
    for (int i = 0; i < M_; ++i) {
        const double sig = arr_.sigma(i, t);
        const int o = m.owner[i];
        double up = 0;
        if (o >= 0) {
            const auto& tg = cfg_.targets[i];
            up = tg.mu[o] * std::max(0.0, 1.0 - dist(s[o], tg.pos) / tg.range[o]);
        }
        f.X[i] = m.xclamp[i] ? 0.0 : sig - up;
        if (o >= 0) f.Z[i * N_ + o] = m.xclamp[i] ? sig : up;
    }
    for (int j = 0; j < N_; ++j) {
        if (!m.inbase[j]) continue;
        const double pB = std::max(0.0, 1.0 - dist(s[j], cfg_.base.pos) / cfg_.base.range[j]);
        for (int i = 0; i < M_; ++i) {
            if (m.owner[i] == j || m.zempty[i * N_ + j]) continue;
            const double r = cfg_.base.beta[i][j] * pB;
            f.Z[i * N_ + j] -= r;
            f.Y[i] += r;
        }
    }
    return f;
}

Simulator::State Simulator::rk4(double t, const State& y, double h, const Mode& m) const {
    const int N = N_, M = M_;
    State out = y;
    if (h == 0) return out;
    std::vector<double> rho(N);
    const double c[4] = {0.0, 0.5, 0.5, 1.0};
    const double w[4] = {1.0 / 6, 2.0 / 6, 2.0 / 6, 1.0 / 6};
    std::vector<double> k(N, 0.0);
    for (int st = 0; st < 4; ++st) {
        for (int j = 0; j < N; ++j) rho[j] = y[j] + c[st] * h * k[j];
        const Flows f = flows(t + c[st] * h, rho, m);
        for (int j = 0; j < N; ++j) {
            k[j] = f.rho[j];
            out[j] += h * w[st] * f.rho[j];
        }
        for (int i = 0; i < M; ++i) {
            out[N + i] += h * w[st] * f.X[i];
            out[N + M + M * N + i] += h * w[st] * f.Y[i];
        }
        for (int q = 0; q < M * N; ++q) out[N + M + q] += h * w[st] * f.Z[q];
    }
    return out;
}

std::vector<Simulator::Guard> Simulator::guards(const Mode& m) const {
    std::vector<Guard> g;
    for (int i = 0; i < M_; ++i)
        for (int j = 0; j < N_; ++j) g.push_back({0, i, j});
    for (int j = 0; j < N_; ++j) g.push_back({1, -1, j});
    for (int i = 0; i < M_; ++i) g.push_back({m.xclamp[i] ? 3 : 2, i, -1});
    for (int i = 0; i < M_; ++i)
        for (int j = 0; j < N_; ++j)
            if (m.inbase[j] && !m.zempty[i * N_ + j] && m.owner[i] != j) g.push_back({4, i, j});
    for (int j = 0; j < N_; ++j)
        if (std::isfinite(paths_[j].segment_end(m.seg[j]))) g.push_back({5, -1, j});
    return g;
}

double Simulator::guard_value(const Guard& g, double t, const State& y, const Mode& m) const {
    switch (g.type) {
        case 0: {
            const double d = dist(paths_[g.j].position(y[g.j], m.seg[g.j]), cfg_.targets[g.i].pos);
            const double r = cfg_.targets[g.i].range[g.j];
            return m.inrange[g.i * N_ + g.j] ? d - r : r - d;
        }
        case 1: {
            const double d = dist(paths_[g.j].position(y[g.j], m.seg[g.j]), cfg_.base.pos);
            const double r = cfg_.base.range[g.j];
            return m.inbase[g.j] ? d - r : r - d;
        }
        case 2: return -y[N_ + g.i];
        case 3: {
            const int o = m.owner[g.i];
            double up = 0;
            if (o >= 0) {
                const auto& tg = cfg_.targets[g.i];
                up = tg.mu[o] * std::max(0.0, 1.0 - dist(paths_[o].position(y[o], m.seg[o]), tg.pos) / tg.range[o]);
            }
            return arr_.sigma(g.i, t) - up;
        }
        case 4: return -y[N_ + M_ + g.i * N_ + g.j];
        case 5: return y[g.j] - paths_[g.j].segment_end(m.seg[g.j]);
    }
    return -1;
}

std::vector<double> Simulator::guard_values(const std::vector<Guard>& gs, double t, const State& y,
                                            const Mode& m) const {
    std::vector<Vec2> s(N_);
    for (int j = 0; j < N_; ++j) s[j] = paths_[j].position(y[j], m.seg[j]);
    std::vector<double> out(gs.size());
    for (size_t q = 0; q < gs.size(); ++q) {
        const Guard& g = gs[q];
        switch (g.type) {
            case 0: {
                const double d = dist(s[g.j], cfg_.targets[g.i].pos);
                const double r = cfg_.targets[g.i].range[g.j];
                out[q] = m.inrange[g.i * N_ + g.j] ? d - r : r - d;
                break;
            }
            case 1: {
                const double d = dist(s[g.j], cfg_.base.pos);
                const double r = cfg_.base.range[g.j];
                out[q] = m.inbase[g.j] ? d - r : r - d;
                break;
            }
            case 3: {
                const int o = m.owner[g.i];
                double up = 0;
                if (o >= 0) {
                    const auto& tg = cfg_.targets[g.i];
                    up = tg.mu[o] * std::max(0.0, 1.0 - dist(s[o], tg.pos) / tg.range[o]);
                }
                out[q] = arr_.sigma(g.i, t) - up;
                break;
            }
            default: out[q] = guard_value(g, t, y, m);
        }
    }
    return out;
}

SimTrace Simulator::run() const {
    const int M = M_, N = N_;
    const double T = cfg_.T;
    const int K = cfg_.steps;
    const double tol = cfg_.event_tol * T;
    const double tiny = 1e-12 * T;
    auto grid_time = [&](int k) { return k >= K ? T : (T * k) / K; };

    SimTrace tr;
    tr.arrivals = arr_;
    State y(N + M + M * N + M, 0.0);
    if (!cfg_.X0.empty())
        for (int i = 0; i < M; ++i) y[N + i] = cfg_.X0[i];
    auto rho_of = [&](const State& s) { return std::vector<double>(s.begin(), s.begin() + N); };

    auto push_node = [&](double t, const State& s, int mode) {
        TraceNode nd;
        nd.t = t;
        nd.rho = rho_of(s);
        nd.X.assign(s.begin() + N, s.begin() + N + M);
        nd.Z.assign(s.begin() + N + M, s.begin() + N + M + M * N);
        nd.Y.assign(s.begin() + N + M + M * N, s.end());
        nd.mode = mode;
        tr.nodes.push_back(std::move(nd));
        return static_cast<int>(tr.nodes.size()) - 1;
    };

    auto make_record = [&](double t, EventKind kind, int i, int j, bool induced) {
        EventRecord e;
        e.t = t;
        e.kind = kind;
        e.i = i;
        e.j = j;
        e.induced = induced;
        return e;
    };

    // Geometric changes applied to mode; returns handoff agent for delta+.
    auto enter_target = [&](Mode& m, int i, int j) {
        m.inrange[i * N + j] = 1;
        if (m.owner[i] < 0) {
            m.owner[i] = j;
            m.zempty[i * N + j] = 0;
        }
    };
    auto leave_target = [&](Mode& m, int i, int j) {
        m.inrange[i * N + j] = 0;
        if (m.owner[i] != j) return -1;
        int l = -1;
        for (int a = 0; a < N; ++a)
            if (m.inrange[i * N + a]) {
                l = a;
                break;
            }
        m.owner[i] = l;
        if (l >= 0) m.zempty[i * N + l] = 0;
        return l;
    };

    // induced queue-mode changes after geometric updates
    auto normalize = [&](double t, State& s, Mode& m, std::vector<EventRecord>* out) {
        const auto sn = snapshot(rho_of(s), m);
        for (int i = 0; i < M; ++i) {
            const int o = m.owner[i];
            const double up = o >= 0 ? cfg_.targets[i].mu[o] * sn.p[i * N + o] : 0.0;
            const double g = arr_.sigma(i, t) - up;
            if (m.xclamp[i] && g > 0) {
                m.xclamp[i] = 0;
                if (out) out->push_back(make_record(t, EventKind::xi_plus, i, -1, true));
            } else if (!m.xclamp[i] && s[N + i] <= 0 && g <= 0 && o >= 0) {
                m.xclamp[i] = 1;
                s[N + i] = 0;
                if (out) out->push_back(make_record(t, EventKind::xi0, i, -1, true));
            }
        }
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < N; ++j) {
                const int q = i * N + j;
                if (m.inbase[j] && !m.zempty[q] && m.owner[i] != j && s[N + M + q] <= 0) {
                    m.zempty[q] = 1;
                    s[N + M + q] = 0;
                    if (out) out->push_back(make_record(t, EventKind::zeta0, i, j, true));
                }
            }
    };

    // initial mode
    Mode m;
    m.owner.assign(M, -1);
    m.xclamp.assign(M, 0);
    m.zempty.assign(M * N, 1);
    m.inrange.assign(M * N, 0);
    m.inbase.assign(N, 0);
    m.seg.assign(N, 0);
    {
        const auto sn = snapshot(rho_of(y), m);
        for (int j = 0; j < N; ++j) {
            m.inbase[j] = dist(sn.s[j], cfg_.base.pos) < cfg_.base.range[j];
            for (int i = 0; i < M; ++i)
                if (dist(sn.s[j], cfg_.targets[i].pos) < cfg_.targets[i].range[j]) enter_target(m, i, j);
        }
        normalize(0.0, y, m, nullptr);
    }
    tr.modes.push_back(m);
    push_node(0.0, y, 0);

    const auto& kap = arr_.breakpoints();
    size_t kn = 0;
    auto log_kappa = [&](double t, int node) {
        if (kn < kap.size() && std::abs(kap[kn] - t) <= tiny) {
            for (int i = 0; i < M; ++i) {
                if (cfg_.arrivals[i].mode != ArrivalSpec::Mode::piecewise_linear) continue;
                EventRecord e = make_record(t, EventKind::kappa, i, -1, false);
                e.node = node;
                tr.events.push_back(std::move(e));
            }
            ++kn;
        }
    };

    int k = 0;
    double t = 0;
    while (t < T - tiny) {
        double tn = grid_time(k + 1);
        if (kn < kap.size() && kap[kn] < tn - tiny) tn = kap[kn];
        double h = tn - t;
        const auto gs = guards(m);
        std::vector<int> crossed;
        State y1;
        for (int halve = 0;; ++halve) {
            crossed.clear();
            y1 = rk4(t, y, h, m);
            const State ym = rk4(t, y, 0.5 * h, m);
            bool dbl = false;
            const auto v1 = guard_values(gs, t + h, y1, m);
            const auto vm = guard_values(gs, t + 0.5 * h, ym, m);
            for (size_t q = 0; q < gs.size(); ++q) {
                if (v1[q] > 0)
                    crossed.push_back(static_cast<int>(q));
                else if (vm[q] > 0)
                    dbl = true;
            }
            if (!dbl || halve >= 30) break;
            h *= 0.5;
            ++tr.halvings;
        }
        const double tend = t + h;
        const bool full = h == tn - t;

        if (crossed.empty()) {
            t = full ? tn : tend;
            y = y1;
            if (full && tn == grid_time(k + 1)) ++k;
            for (int i = 0; i < M; ++i)
                if (!m.xclamp[i] && y[N + i] < -1e-9)
                    throw std::runtime_error("integrator failure: negative target queue");
            const int nd = push_node(t, y, static_cast<int>(tr.modes.size()) - 1);
            log_kappa(t, nd);
            continue;
        }

        // localize
        std::vector<std::pair<double, int>> roots;
        for (int q : crossed) {
            const Guard g = gs[q];
            const double th = locate_crossing(
                [&](double x) { return guard_value(g, t + x, rk4(t, y, x, m), m); }, h, tol);
            roots.push_back({th, q});
        }
        std::sort(roots.begin(), roots.end());
        const double th = roots.front().first;
        y = rk4(t, y, th, m);
        t = (th == h && full) ? tn : t + th;
        if (th == h && full && tn == grid_time(k + 1)) ++k;

        const Mode pre = m;
        std::vector<EventRecord> recs;
        int endogenous = 0;
        for (auto [r, q] : roots) {
            if (r > th + tol) break;
            const Guard g = gs[q];
            ++endogenous;
            switch (g.type) {
                case 0:
                    if (m.inrange[g.i * N + g.j]) {
                        auto e = make_record(t, EventKind::delta_plus, g.i, g.j, false);
                        e.handoff = leave_target(m, g.i, g.j);
                        recs.push_back(std::move(e));
                    } else {
                        enter_target(m, g.i, g.j);
                        recs.push_back(make_record(t, EventKind::delta0, g.i, g.j, false));
                    }
                    break;
                case 1:
                    recs.push_back(make_record(t, m.inbase[g.j] ? EventKind::Delta_plus : EventKind::Delta0, -1, g.j,
                                               false));
                    m.inbase[g.j] = !m.inbase[g.j];
                    break;
                case 2:
                    m.xclamp[g.i] = 1;
                    y[N + g.i] = 0;
                    recs.push_back(make_record(t, EventKind::xi0, g.i, m.owner[g.i], false));
                    break;
                case 3:
                    m.xclamp[g.i] = 0;
                    recs.push_back(make_record(t, EventKind::xi_plus, g.i, m.owner[g.i], false));
                    break;
                case 4:
                    m.zempty[g.i * N + g.j] = 1;
                    y[N + M + g.i * N + g.j] = 0;
                    recs.push_back(make_record(t, EventKind::zeta0, g.i, g.j, false));
                    break;
                case 5: {
                    const int j = g.j;
                    recs.push_back(make_record(t, EventKind::segment, -1, j, false));
                    m.seg[j] += 1;
                    const Vec2 s = paths_[j].position(y[j], m.seg[j]);
                    for (int i = 0; i < M; ++i) {
                        const bool in = dist(s, cfg_.targets[i].pos) < cfg_.targets[i].range[j];
                        if (in && !m.inrange[i * N + j]) {
                            enter_target(m, i, j);
                            recs.push_back(make_record(t, EventKind::delta0, i, j, true));
                        } else if (!in && m.inrange[i * N + j]) {
                            auto e = make_record(t, EventKind::delta_plus, i, j, true);
                            e.handoff = leave_target(m, i, j);
                            recs.push_back(std::move(e));
                        }
                    }
                    const bool inb = dist(s, cfg_.base.pos) < cfg_.base.range[j];
                    if (inb != static_cast<bool>(m.inbase[j])) {
                        recs.push_back(
                            make_record(t, inb ? EventKind::Delta0 : EventKind::Delta_plus, -1, j, true));
                        m.inbase[j] = inb;
                    }
                    break;
                }
            }
        }
        if (endogenous > 1) ++tr.simultaneous;
        normalize(t, y, m, &recs);
        std::stable_sort(recs.begin(), recs.end(), [](const EventRecord& a, const EventRecord& b) {
            if (priority(a.kind) != priority(b.kind)) return priority(a.kind) < priority(b.kind);
            if (a.induced != b.induced) return !a.induced;
            if (a.i != b.i) return a.i < b.i;
            return a.j < b.j;
        });

        for (int j = 0; j < N; ++j)
            if (m.inbase[j])
                for (int i = 0; i < M; ++i)
                    if (m.inrange[i * N + j]) throw std::logic_error("agent in range of a target and the base");

        tr.modes.push_back(m);
        const int nd = push_node(t, y, static_cast<int>(tr.modes.size()) - 1);
        const auto rho = rho_of(y);
        const auto sn = snapshot(rho, m);
        const auto fpre = flows(t, rho, pre);
        const auto fpost = flows(t, rho, m);
        std::vector<double> pre_q(fpre.X), post_q(fpost.X);
        pre_q.insert(pre_q.end(), fpre.Z.begin(), fpre.Z.end());
        post_q.insert(post_q.end(), fpost.Z.begin(), fpost.Z.end());
        std::vector<double> sig(M), sigd(M);
        for (int i = 0; i < M; ++i) {
            sig[i] = arr_.sigma(i, t);
            sigd[i] = arr_.sigma_dot(i, t);
        }
        for (auto& e : recs) {
            e.node = nd;
            e.p = sn.p;
            e.pB = sn.pB;
            e.sigma = sig;
            e.sigma_dot = sigd;
            e.flow_pre = pre_q;
            e.flow_post = post_q;
            tr.events.push_back(std::move(e));
        }
        log_kappa(t, nd);
    }
    return tr;
}

SimTrace simulate(const MissionConfig& cfg, const Layout& L, const std::vector<double>& theta, const Arrivals& arr) {
    const auto paths = build_paths(L, theta, cfg.base.pos);
    Simulator sim(cfg, paths, arr);
    return sim.run();
}

}  // namespace harvest

#include "harvest/model.hpp"

#include <algorithm>
#include <random>

namespace harvest {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace

double MissionConfig::target_radius(int i) const {
    const auto& r = targets[i].range;
    return *std::min_element(r.begin(), r.end());
}

double MissionConfig::base_radius() const {
    return *std::min_element(base.range.begin(), base.range.end());
}

void MissionConfig::validate() const {
    if (N < 1) throw ConfigError("agent count must be >= 1");
    if (targets.empty()) throw ConfigError("at least one target required");
    if (!(T > 0)) throw ConfigError("horizon T must be positive");
    if (q < 0 || q > 1) throw ConfigError("q must lie in [0,1]");
    if (!(L1 > 0) || !(L2 > 0)) throw ConfigError("mission rectangle must be non-empty");
    if (steps < 1) throw ConfigError("integrator steps must be >= 1");
    if (grid_nx < 1 || grid_ny < 1) throw ConfigError("grid resolution must be >= 1");
    if (static_cast<int>(arrivals.size()) != M()) throw ConfigError("one arrival entry per target required");
    if (static_cast<int>(base.range.size()) != N) throw ConfigError("base range needs one entry per agent");
    if (static_cast<int>(base.beta.size()) != M()) throw ConfigError("beta needs one row per target");
    for (int j = 0; j < N; ++j)
        if (!(base.range[j] > 0)) throw ConfigError("base range must be positive");
    for (int i = 0; i < M(); ++i) {
        const auto& tg = targets[i];
        if (static_cast<int>(tg.range.size()) != N || static_cast<int>(tg.mu.size()) != N ||
            static_cast<int>(base.beta[i].size()) != N)
            throw ConfigError("target " + std::to_string(i) + ": per-agent vectors must have N entries");
        if (!(tg.alpha > 0)) throw ConfigError("target " + std::to_string(i) + ": alpha must be positive");
        if (tg.pos.x < 0 || tg.pos.x > L1 || tg.pos.y < 0 || tg.pos.y > L2)
            throw ConfigError("target " + std::to_string(i) + " lies outside the mission rectangle");
        const double dB = dist(tg.pos, base.pos);
        for (int j = 0; j < N; ++j) {
            if (!(tg.range[j] > 0)) throw ConfigError("target range must be positive");
            if (!(tg.mu[j] > 0)) throw ConfigError("mu must be positive");
            if (!(base.beta[i][j] > 0)) throw ConfigError("beta must be positive");
            if (!(dB > tg.range[j] + base.range[j]))
                throw ConfigError("target " + std::to_string(i) + " range overlaps the base range for agent " +
                                  std::to_string(j));
        }
        const auto& a = arrivals[i];
        if (a.mean < 0 || a.amplitude < 0 || a.amplitude > 1 || a.delta < 0)
            throw ConfigError("target " + std::to_string(i) + ": invalid arrival settings");
    }
    if (!X0.empty() && static_cast<int>(X0.size()) != M()) throw ConfigError("X0 needs one entry per target");
    for (double x : X0)
        if (x < 0) throw ConfigError("initial queues must be non-negative");
}

double proximity(Vec2 w, Vec2 v, double r) {
    if (!(r > 0)) throw ConfigError("proximity range must be positive");
    return std::max(0.0, 1.0 - dist(w, v) / r);
}

double d_plus(double d, double r) { return std::max(0.0, d - r); }

double idling(Vec2 s, int j, const MissionConfig& cfg) {
    double prod = d_plus(dist(s, cfg.base.pos), cfg.base.range[j]);
    for (const auto& tg : cfg.targets) prod *= d_plus(dist(s, tg.pos), tg.range[j]);
    return std::log1p(prod);
}

Arrivals::Arrivals(const MissionConfig& cfg, std::uint64_t replication) : T_(cfg.T) {
    paths_.resize(cfg.M());
    for (int i = 0; i < cfg.M(); ++i) {
        const auto& a = cfg.arrivals[i];
        auto& p = paths_[i];
        if (a.mode == ArrivalSpec::Mode::constant) {
            p.dt = cfg.T;
            p.nodes = {a.mean, a.mean};
            continue;
        }
        stochastic_ = true;
        const double delta = a.delta > 0 ? a.delta : cfg.T / 20.0;
        const int K = std::max(1, static_cast<int>(std::ceil(cfg.T / delta - 1e-9)));
        p.dt = delta;
        std::mt19937_64 g(splitmix(a.seed ^ splitmix(static_cast<std::uint64_t>(i) * 1000003ULL + replication)));
        p.nodes.assign(K + 1, a.mean);
        for (int k = 1; k <= K; ++k) p.nodes[k] = a.mean * (1.0 + a.amplitude * (2.0 * unit(g) - 1.0));
        // rescale nodes 1..K so the time average over [0,T] equals the mean; node 0 stays pinned
        auto area = [&](const std::vector<double>& v) {
            double acc = 0;
            for (int k = 0; k < K; ++k) {
                const double t0 = k * delta, t1 = std::min(cfg.T, (k + 1) * delta);
                if (t1 <= t0) break;
                const double end = v[k] + (t1 - t0) / delta * (v[k + 1] - v[k]);
                acc += 0.5 * (t1 - t0) * (v[k] + end);
            }
            return acc;
        };
        std::vector<double> head(K + 1, 0.0), tail = p.nodes;
        head[0] = p.nodes[0];
        tail[0] = 0.0;
        const double fixed = area(head), rest = area(tail);
        if (rest > 0)
            for (int m = 1; m <= K; ++m) p.nodes[m] *= (a.mean * cfg.T - fixed) / rest;
        for (int k = 1; k < K; ++k) breaks_.push_back(k * delta);
    }
    std::sort(breaks_.begin(), breaks_.end());
    breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
}

double Arrivals::sigma(int i, double t) const {
    const auto& p = paths_[i];
    const int K = static_cast<int>(p.nodes.size()) - 1;
    int k = std::clamp(static_cast<int>(std::floor(t / p.dt)), 0, K - 1);
    const double w = (t - k * p.dt) / p.dt;
    return p.nodes[k] + w * (p.nodes[k + 1] - p.nodes[k]);
}

double Arrivals::sigma_dot(int i, double t) const {
    const auto& p = paths_[i];
    const int K = static_cast<int>(p.nodes.size()) - 1;
    int k = std::clamp(static_cast<int>(std::floor(t / p.dt)), 0, K - 1);
    return (p.nodes[k + 1] - p.nodes[k]) / p.dt;
}

double Arrivals::cumulative(int i, double t) const {
    const auto& p = paths_[i];
    const int K = static_cast<int>(p.nodes.size()) - 1;
    double acc = 0;
    for (int k = 0; k < K; ++k) {
        const double t0 = k * p.dt;
        if (t <= t0) break;
        const double t1 = std::min(t, (k + 1) * p.dt);
        acc += 0.5 * (t1 - t0) * (sigma(i, t0) + sigma(i, t1));
    }
    return acc;
}

const char* kind_name(EventKind k) {
    switch (k) {
        case EventKind::xi0: return "xi0";
        case EventKind::xi_plus: return "xi+";
        case EventKind::zeta0: return "zeta0";
        case EventKind::delta_plus: return "delta+";
        case EventKind::delta0: return "delta0";
        case EventKind::Delta_plus: return "Delta+";
        case EventKind::Delta0: return "Delta0";
        case EventKind::kappa: return "kappa";
        case EventKind::segment: return "segment";
    }
    return "?";
}

bool is_endogenous(EventKind k) { return k != EventKind::kappa; }

}  // namespace harvest

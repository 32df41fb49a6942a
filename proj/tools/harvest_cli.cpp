#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "harvest/field.hpp"
#include "harvest/io.hpp"
#include "harvest/ipa.hpp"
#include "harvest/objective.hpp"
#include "harvest/optimizer.hpp"
#include "harvest/oracle.hpp"
#include "harvest/scenario.hpp"

using namespace harvest;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string scenario;
    std::string family = "fourier";
    int segments = 1;
    int harmonics = 3;
    std::uint64_t seed = 1;
    std::string out = "runs";
    std::string theta;
    std::uint64_t replication = 0;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Layout make_layout(const MissionConfig& cfg, const Common& c) {
    const Family f = parse_family(c.family);
    if (f == Family::ellipse) return Layout::ellipse(std::vector<int>(cfg.N, c.segments));
    return Layout::fourier(cfg.N, c.harmonics, c.harmonics);
}

// layout and parameters from --theta, else the seeded default start
std::pair<Layout, std::vector<double>> starting_point(const MissionConfig& cfg, const Common& c) {
    if (!c.theta.empty()) {
        auto tf = load_theta(c.theta, cfg.N);
        return {tf.layout, tf.theta};
    }
    Layout L = make_layout(cfg, c);
    return {L, init_theta(cfg, L, c.seed)};
}

RunMetadata metadata(const std::string& cmd, const MissionConfig& cfg, const Common& c, const Layout& L) {
    RunMetadata m;
    m.command = cmd;
    m.config_hash = hex64(fnv1a(slurp(c.scenario)));
    m.seed = c.seed;
    m.grid_nx = cfg.grid_nx;
    m.grid_ny = cfg.grid_ny;
    m.step = cfg.step();
    m.family = family_name(L.family());
    m.dim = L.dim();
    return m;
}

std::string cost_json(const CostBreakdown& c) {
    std::ostringstream o;
    o << "{\n  \"J\": " << fmt(c.J) << ",\n  \"J1\": " << fmt(c.J1) << ",\n  \"J2\": " << fmt(c.J2)
      << ",\n  \"J3\": " << fmt(c.J3) << ",\n  \"J4\": " << fmt(c.J4) << ",\n  \"Jf\": " << fmt(c.Jf)
      << ",\n  \"penalty\": " << fmt(c.penalty) << "\n}\n";
    return o.str();
}

void add_common(CLI::App* sc, Common& c, bool needs_out) {
    sc->add_option("--scenario", c.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
    sc->add_option("--family", c.family, "trajectory family")->check(CLI::IsMember({"ellipse", "fourier"}));
    sc->add_option("--segments", c.segments, "ellipse segments per agent")->check(CLI::PositiveNumber);
    sc->add_option("--harmonics", c.harmonics, "Fourier harmonics per axis")->check(CLI::PositiveNumber);
    sc->add_option("--seed", c.seed, "seed for initialization and stochastic arrivals");
    sc->add_option("--theta", c.theta, "parameter JSON file (overrides --family/--segments)");
    if (needs_out) sc->add_option("--out", c.out, "output directory");
}

int cmd_simulate(const Common& c) {
    const auto cfg = load_scenario(c.scenario);
    auto [L, theta] = starting_point(cfg, c);
    CostContext cc(cfg);
    const Arrivals arr(cfg, c.replication);
    const auto tr = simulate(cfg, L, theta, arr);
    const auto cost = total_cost(cc, L, theta, tr);
    fs::create_directories(c.out);
    write_trace_csv((fs::path(c.out) / "trace.csv").string(), cfg, L, theta, tr);
    write_events_csv((fs::path(c.out) / "events.csv").string(), tr);
    write_text((fs::path(c.out) / "cost.json").string(), cost_json(cost));
    write_text((fs::path(c.out) / "theta.json").string(), theta_to_json(L, theta));
    write_metadata((fs::path(c.out) / "metadata.json").string(), metadata("simulate", cfg, c, L));
    std::printf("J=%s events=%zu nodes=%zu\n", fmt(cost.J).c_str(), tr.events.size(), tr.nodes.size());
    return 0;
}

int cmd_optimize(const Common& c, int iters, int restarts, int jobs, int search) {
    const auto cfg = load_scenario(c.scenario);
    CostContext cc(cfg);
    OptimizerOptions opt;
    opt.iterations = iters;
    opt.jobs = jobs;
    Layout L = make_layout(cfg, c);
    std::vector<double> theta;
    std::vector<HistoryRow> hist;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        opt.seed = c.seed + static_cast<std::uint64_t>(r);
        if (search > 0) {
            auto s = segment_search(cc, search, opt);
            if (s.J < best) {
                best = s.J;
                L = Layout::ellipse(std::vector<int>(cfg.N, s.segments));
                theta = s.theta;
                hist = s.run.history;
            }
            continue;
        }
        std::vector<double> t0;
        Layout Lr = L;
        if (!c.theta.empty()) {
            auto tf = load_theta(c.theta, cfg.N);
            Lr = tf.layout;
            t0 = tf.theta;
        } else {
            t0 = init_theta(cfg, L, opt.seed);
        }
        auto run = optimize(cc, Lr, t0, opt);
        if (run.history.back().cost.J < best) {
            best = run.history.back().cost.J;
            L = Lr;
            theta = run.theta;
            hist = run.history;
        }
    }
    fs::create_directories(c.out);
    write_history_csv((fs::path(c.out) / "history.csv").string(), hist);
    write_text((fs::path(c.out) / "theta.json").string(), theta_to_json(L, theta));
    const Arrivals arr(cfg, 0);
    const auto tr = simulate(cfg, L, theta, arr);
    write_trace_csv((fs::path(c.out) / "trace.csv").string(), cfg, L, theta, tr);
    write_events_csv((fs::path(c.out) / "events.csv").string(), tr);
    write_metadata((fs::path(c.out) / "metadata.json").string(), metadata("optimize", cfg, c, L));
    const auto& h0 = hist.front().cost;
    const auto& h1 = hist.back().cost;
    std::printf("J0=%s J=%s J1=%s J2=%s penalty=%s\n", fmt(h0.J).c_str(), fmt(h1.J).c_str(), fmt(h1.J1).c_str(),
                fmt(h1.J2).c_str(), fmt(h1.penalty).c_str());
    return 0;
}

int cmd_grad_check(const Common& c, double tol, const std::string& csv) {
    const auto cfg = load_scenario(c.scenario);
    auto [L, theta] = starting_point(cfg, c);
    CostContext cc(cfg);
    const Arrivals arr(cfg, c.replication);
    const auto tr = simulate(cfg, L, theta, arr);
    const auto g = assemble_gradient(cc, L, theta, tr);
    if (!g.valid) {
        std::fprintf(stderr, "gradient invalid: %s\n", g.reason.c_str());
        return 2;
    }
    auto cost = [&](const std::vector<double>& th) {
        const auto t = simulate(cfg, L, th, arr);
        return total_cost(cc, L, th, t).J;
    };
    const auto fd = fd_gradient(cost, theta);
    std::ostringstream o;
    o << "k,name,ipa,fd,h,rel_err,significant\n";
    int bad = 0;
    for (int k = 0; k < L.dim(); ++k) {
        // closest step in the sweep
        size_t q = 0;
        for (size_t h = 1; h < fd.hs.size(); ++h)
            if (std::abs(fd.by_h[h][k] - g.grad[k]) < std::abs(fd.by_h[q][k] - g.grad[k])) q = h;
        const double f = fd.by_h[q][k];
        const double scale = std::max(std::abs(f), std::abs(g.grad[k]));
        const double rel = scale > 0 ? std::abs(f - g.grad[k]) / scale : 0.0;
        const bool sig = scale > 1e-6;
        if (sig && rel > tol) ++bad;
        o << k << "," << L.name(k) << "," << fmt(g.grad[k]) << "," << fmt(f) << "," << fmt(fd.hs[q]) << ","
          << fmt(rel) << "," << (sig ? 1 : 0) << "\n";
    }
    if (csv.empty())
        std::cout << o.str();
    else
        write_text(csv, o.str());
    std::fprintf(stderr, "%d significant component(s) above %.3g relative error\n", bad, tol);
    return bad > 0 ? 1 : 0;
}

int cmd_field(const Common& c, int n) {
    const auto cfg = load_scenario(c.scenario);
    std::vector<Vec2> pts;
    for (const auto& t : cfg.targets) pts.push_back(t.pos);
    const auto hull = convex_hull(pts);
    std::vector<double> X(cfg.M(), 1.0);
    const QuadratureGrid grid(n, n, cfg.L1, cfg.L2);
    std::ostringstream o;
    o << "x,y,R,inside_hull\n";
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) {
            const Vec2 w = grid.cell(ix, iy);
            o << fmt(w.x) << "," << fmt(w.y) << "," << fmt(field_R(cfg, w, X)) << ","
              << (hull.degenerate ? 0 : hull.contains(w) ? 1 : 0) << "\n";
        }
    fs::create_directories(c.out);
    write_text((fs::path(c.out) / "field.csv").string(), o.str());
    std::ostringstream ci;
    ci << "i,c_i\n";
    if (!hull.degenerate)
        for (int i = 0; i < cfg.M(); ++i) ci << i << "," << fmt(compute_ci(cfg, i, hull)) << "\n";
    write_text((fs::path(c.out) / "ci.csv").string(), ci.str());
    Layout L = make_layout(cfg, c);
    write_metadata((fs::path(c.out) / "metadata.json").string(), metadata("field", cfg, c, L));
    return 0;
}

int cmd_audit(const Common& c, double tol) {
    const auto cfg = load_scenario(c.scenario);
    auto [L, theta] = starting_point(cfg, c);
    CostContext cc(cfg);
    const Arrivals arr(cfg, c.replication);
    const auto tr = simulate(cfg, L, theta, arr);
    const auto a = conservation_audit(cfg, tr);
    const auto cost = total_cost(cc, L, theta, tr);
    const bool bound = cost.J >= -(1 - cfg.q);
    std::printf("conservation_max_abs=%s relative=%s inflow=%s\n", fmt(a.max_abs).c_str(), fmt(a.relative).c_str(),
                fmt(a.inflow_T).c_str());
    std::printf("J=%s lower_bound=%s holds=%d events=%zu simultaneous=%d halvings=%d\n", fmt(cost.J).c_str(),
                fmt(-(1 - cfg.q)).c_str(), bound ? 1 : 0, tr.events.size(), tr.simultaneous, tr.halvings);
    return (a.relative <= tol && bound) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"harvest: multi-agent data harvesting simulation and trajectory optimization"};
    app.require_subcommand(1);
    Common c;
    int iters = 200, restarts = 1, jobs = default_jobs(), search = 0, n = 100;
    double tol = 0.05, atol = 1e-6;
    std::string csv;

    auto* sim = app.add_subcommand("simulate", "simulate one trajectory and write trace/events CSV");
    add_common(sim, c, true);
    sim->add_option("--replication", c.replication, "arrival realization index");

    auto* opt = app.add_subcommand("optimize", "run gradient descent on trajectory parameters");
    add_common(opt, c, true);
    opt->add_option("--iters", iters, "iteration budget")->check(CLI::NonNegativeNumber);
    opt->add_option("--restarts", restarts, "independent seeded starts, best kept")->check(CLI::PositiveNumber);
    opt->add_option("--jobs", jobs, "parallel replications (default $HARVEST_OPT_JOBS or 1)")
        ->check(CLI::PositiveNumber);
    opt->add_option("--segment-search", search, "ellipse: search segment counts up to this bound");

    auto* gc = app.add_subcommand("grad-check", "compare IPA gradient with finite differences");
    add_common(gc, c, false);
    gc->add_option("--tol", tol, "relative tolerance for significant components");
    gc->add_option("--csv", csv, "write the comparison here instead of stdout");
    gc->add_option("--replication", c.replication, "arrival realization index");

    auto* fld = app.add_subcommand("field", "dump the potential field and c_i constants");
    add_common(fld, c, true);
    fld->add_option("--resolution", n, "cells per axis")->check(CLI::PositiveNumber);

    auto* aud = app.add_subcommand("audit", "conservation and lower-bound audit of one simulation");
    add_common(aud, c, false);
    aud->add_option("--tol", atol, "relative conservation tolerance");
    aud->add_option("--replication", c.replication, "arrival realization index");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sim) return cmd_simulate(c);
        if (*opt) return cmd_optimize(c, iters, restarts, jobs, search);
        if (*gc) return cmd_grad_check(c, tol, csv);
        if (*fld) return cmd_field(c, n);
        if (*aud) return cmd_audit(c, atol);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}

#include "harvest/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace harvest {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

void write_metadata(const std::string& path, const RunMetadata& m) {
    json j;
    j["tool"] = "harvest";
    j["version"] = kToolVersion;
    j["command"] = m.command;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["grid"] = {m.grid_nx, m.grid_ny};
    j["integrator_step"] = m.step;
    j["family"] = m.family;
    j["parameters"] = m.dim;
    write_text(path, j.dump(2) + "\n");
}

std::string theta_to_json(const Layout& L, const std::vector<double>& theta) {
    json j;
    j["family"] = family_name(L.family());
    if (L.family() == Family::ellipse) {
        std::vector<int> segs;
        for (int a = 0; a < L.agents(); ++a) segs.push_back(L.block(a).segments);
        j["segments"] = segs;
    } else {
        j["harmonics"] = {L.block(0).gx, L.block(0).gy};
    }
    json vals = json::object();
    for (int k = 0; k < L.dim(); ++k) vals[L.name(k)] = theta[k];
    j["theta"] = theta;
    j["named"] = vals;
    return j.dump(2) + "\n";
}

ThetaFile theta_from_json(const std::string& text, int agents) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("theta file is not valid JSON: ") + e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it)
        if (it.key() != "family" && it.key() != "segments" && it.key() != "harmonics" && it.key() != "theta" &&
            it.key() != "named")
            throw ConfigError("unknown key 'theta." + it.key() + "'");
    try {
        const Family f = parse_family(j.at("family").get<std::string>());
        ThetaFile tf;
        if (f == Family::ellipse) {
            const auto segs = j.at("segments").get<std::vector<int>>();
            if (static_cast<int>(segs.size()) != agents) throw ConfigError("key 'segments' must list every agent");
            tf.layout = Layout::ellipse(segs);
        } else {
            const auto hm = j.at("harmonics").get<std::vector<int>>();
            if (hm.size() != 2) throw ConfigError("key 'harmonics' must be [gx, gy]");
            tf.layout = Layout::fourier(agents, hm[0], hm[1]);
        }
        tf.theta = j.at("theta").get<std::vector<double>>();
        if (static_cast<int>(tf.theta.size()) != tf.layout.dim())
            throw ConfigError("key 'theta' has " + std::to_string(tf.theta.size()) + " entries, expected " +
                              std::to_string(tf.layout.dim()));
        return tf;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("theta schema error: ") + e.what());
    }
}

ThetaFile load_theta(const std::string& path, int agents) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open theta file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return theta_from_json(ss.str(), agents);
}

void write_trace_csv(const std::string& path, const MissionConfig& cfg, const Layout& L,
                     const std::vector<double>& theta, const SimTrace& tr) {
    const int M = cfg.M(), N = cfg.N;
    const auto paths = build_paths(L, theta, cfg.base.pos);
    std::ostringstream o;
    o << "t";
    for (int j = 0; j < N; ++j) o << ",rho" << j << ",x" << j << ",y" << j << ",seg" << j;
    for (int i = 0; i < M; ++i) o << ",X" << i;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) o << ",Z" << i << "_" << j;
    for (int i = 0; i < M; ++i) o << ",Y" << i;
    for (int i = 0; i < M; ++i) o << ",owner" << i;
    o << "\n";
    for (const auto& nd : tr.nodes) {
        const Mode& m = tr.modes[nd.mode];
        o << fmt(nd.t);
        for (int j = 0; j < N; ++j) {
            const Vec2 s = paths[j].position(nd.rho[j], m.seg[j]);
            o << "," << fmt(nd.rho[j]) << "," << fmt(s.x) << "," << fmt(s.y) << "," << m.seg[j];
        }
        for (double v : nd.X) o << "," << fmt(v);
        for (double v : nd.Z) o << "," << fmt(v);
        for (double v : nd.Y) o << "," << fmt(v);
        for (int i = 0; i < M; ++i) o << "," << m.owner[i];
        o << "\n";
    }
    write_text(path, o.str());
}

void write_events_csv(const std::string& path, const SimTrace& tr) {
    std::ostringstream o;
    o << "t,kind,i,j,handoff,induced,node\n";
    for (const auto& e : tr.events)
        o << fmt(e.t) << "," << kind_name(e.kind) << "," << e.i << "," << e.j << "," << e.handoff << ","
          << (e.induced ? 1 : 0) << "," << e.node << "\n";
    write_text(path, o.str());
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& h) {
    std::ostringstream o;
    o << "iter,J,J1,J2,J3,J4,Jf,penalty,grad_norm,valid_replications\n";
    for (const auto& r : h)
        o << r.iter << "," << fmt(r.cost.J) << "," << fmt(r.cost.J1) << "," << fmt(r.cost.J2) << ","
          << fmt(r.cost.J3) << "," << fmt(r.cost.J4) << "," << fmt(r.cost.Jf) << "," << fmt(r.cost.penalty) << ","
          << fmt(r.grad_norm) << "," << r.valid_replications << "\n";
    write_text(path, o.str());
}

}  // namespace harvest

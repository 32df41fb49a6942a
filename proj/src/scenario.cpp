#include "harvest/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace harvest {

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
}

double number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("key '" + key + "' must be a number");
    return v.get<double>();
}

Vec2 point(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2) throw ConfigError("key '" + key + "' must be [x, y]");
    return {number(v[0], key), number(v[1], key)};
}

// scalar broadcast or per-agent list
std::vector<double> per_agent(const json& v, int N, const std::string& key) {
    if (v.is_number()) return std::vector<double>(N, v.get<double>());
    if (!v.is_array() || static_cast<int>(v.size()) != N)
        throw ConfigError("key '" + key + "' must be a number or a list of " + std::to_string(N) + " numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, key));
    return out;
}

ArrivalSpec arrival(const json& v, const std::string& where, ArrivalSpec base) {
    check_keys(v, where, {"mode", "mean", "amplitude", "delta", "seed"});
    if (v.contains("mode")) {
        const auto m = v["mode"].get<std::string>();
        if (m == "constant")
            base.mode = ArrivalSpec::Mode::constant;
        else if (m == "piecewise_linear")
            base.mode = ArrivalSpec::Mode::piecewise_linear;
        else
            throw ConfigError("key '" + where + ".mode' must be constant or piecewise_linear");
    }
    if (v.contains("mean")) base.mean = number(v["mean"], where + ".mean");
    if (v.contains("amplitude")) base.amplitude = number(v["amplitude"], where + ".amplitude");
    if (v.contains("delta")) base.delta = number(v["delta"], where + ".delta");
    if (v.contains("seed")) {
        if (!v["seed"].is_number_unsigned()) throw ConfigError("key '" + where + ".seed' must be a non-negative integer");
        base.seed = v["seed"].get<std::uint64_t>();
    }
    return base;
}

}  // namespace

MissionConfig parse_scenario(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    try {
        check_keys(doc, "scenario",
                   {"schema_version", "name", "mission", "horizon", "q", "agents", "base", "targets",
                    "target_defaults", "penalty_multiplier", "grid", "integrator", "initial_queues"});
        if (!doc.contains("schema_version")) throw ConfigError("missing key 'schema_version'");
        if (doc["schema_version"] != kSchemaVersion)
            throw ConfigError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
        for (const char* req : {"mission", "horizon", "agents", "base", "targets"})
            if (!doc.contains(req)) throw ConfigError(std::string("missing key '") + req + "'");

        MissionConfig c;
        if (doc.contains("name")) c.name = doc["name"].get<std::string>();
        const auto& ms = doc["mission"];
        check_keys(ms, "mission", {"L1", "L2"});
        c.L1 = number(ms.at("L1"), "mission.L1");
        c.L2 = number(ms.at("L2"), "mission.L2");
        c.T = number(doc["horizon"], "horizon");
        if (doc.contains("q")) c.q = number(doc["q"], "q");
        if (!doc["agents"].is_number_integer()) throw ConfigError("key 'agents' must be an integer");
        c.N = doc["agents"].get<int>();
        if (c.N < 1) throw ConfigError("key 'agents' must be >= 1");
        if (doc.contains("penalty_multiplier")) c.MC = number(doc["penalty_multiplier"], "penalty_multiplier");
        if (doc.contains("grid")) {
            const auto& g = doc["grid"];
            if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer())
                throw ConfigError("key 'grid' must be [nx, ny]");
            c.grid_nx = g[0].get<int>();
            c.grid_ny = g[1].get<int>();
        }
        if (doc.contains("integrator")) {
            const auto& it = doc["integrator"];
            check_keys(it, "integrator", {"steps", "event_tol"});
            if (it.contains("steps")) {
                if (!it["steps"].is_number_integer()) throw ConfigError("key 'integrator.steps' must be an integer");
                c.steps = it["steps"].get<int>();
            }
            if (it.contains("event_tol")) c.event_tol = number(it["event_tol"], "integrator.event_tol");
        }

        json defaults = json::object();
        if (doc.contains("target_defaults")) {
            defaults = doc["target_defaults"];
            check_keys(defaults, "target_defaults", {"alpha", "range", "mu", "beta", "arrival"});
        }
        ArrivalSpec arr0;
        if (defaults.contains("arrival")) arr0 = arrival(defaults["arrival"], "target_defaults.arrival", arr0);

        const auto& b = doc["base"];
        check_keys(b, "base", {"position", "range"});
        c.base.pos = point(b.at("position"), "base.position");
        c.base.range = per_agent(b.at("range"), c.N, "base.range");

        const auto& ts = doc["targets"];
        if (!ts.is_array() || ts.empty()) throw ConfigError("key 'targets' must be a non-empty list");
        for (size_t i = 0; i < ts.size(); ++i) {
            const std::string w = "targets[" + std::to_string(i) + "]";
            const auto& t = ts[i];
            check_keys(t, w, {"position", "alpha", "range", "mu", "beta", "arrival"});
            auto pick = [&](const char* k) -> const json& {
                if (t.contains(k)) return t[k];
                if (defaults.contains(k)) return defaults[k];
                throw ConfigError("missing key '" + w + "." + k + "'");
            };
            TargetSpec tg;
            tg.pos = point(t.at("position"), w + ".position");
            tg.alpha = (t.contains("alpha") || defaults.contains("alpha")) ? number(pick("alpha"), w + ".alpha") : 1.0;
            tg.range = per_agent(pick("range"), c.N, w + ".range");
            tg.mu = per_agent(pick("mu"), c.N, w + ".mu");
            c.base.beta.push_back(per_agent(pick("beta"), c.N, w + ".beta"));
            c.targets.push_back(tg);
            c.arrivals.push_back(t.contains("arrival") ? arrival(t["arrival"], w + ".arrival", arr0) : arr0);
        }
        if (doc.contains("initial_queues")) {
            for (const auto& x : doc["initial_queues"]) c.X0.push_back(number(x, "initial_queues"));
        }
        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario schema error: ") + e.what());
    }
}

MissionConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

}  // namespace harvest

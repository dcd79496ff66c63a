#include "config.hpp"

#include "wkh/errors.hpp"
#include "wkh/verify.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace wkh::cli {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& prefix) {
    if (!j.is_object()) throw ConfigError((prefix.empty() ? std::string("config") : prefix) + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(join(prefix, key) + ": unknown key");
    }
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(field + ": must be finite");
    return v;
}

double positive(const json& j, const std::string& field) {
    const double v = number(j, field);
    if (!(v > 0.0)) throw ConfigError(field + ": must be positive");
    return v;
}

std::uint64_t unsigned_int(const json& j, const std::string& field) {
    if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)) {
        throw ConfigError(field + ": expected a non-negative integer");
    }
    return j.get<std::uint64_t>();
}

std::vector<double> numbers(const json& j, const std::string& field) {
    if (!j.is_array()) throw ConfigError(field + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

std::string text(const json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError(field + ": expected a string");
    return j.get<std::string>();
}

std::vector<double> attractiveness(const json& j) {
    const auto a = numbers(j, "a");
    if (a.size() < 2) throw ConfigError("a: at least two sellers are required");
    for (double v : a) {
        if (!(v > 0.0)) throw ConfigError("a: every attractiveness must be positive");
    }
    return a;
}

ClusterSpec cluster(const json& j) {
    reject_unknown(j, {"n", "k", "a_low", "a_high"}, "cluster");
    for (const char* key : {"n", "k", "a_low", "a_high"}) {
        if (!j.contains(key)) throw ConfigError(std::string("cluster.") + key + ": missing");
    }
    ClusterSpec c{static_cast<std::size_t>(unsigned_int(j["n"], "cluster.n")),
                  static_cast<std::size_t>(unsigned_int(j["k"], "cluster.k")),
                  positive(j["a_low"], "cluster.a_low"), positive(j["a_high"], "cluster.a_high")};
    try {
        c.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return c;
}

IntegrationOptions integration(const json& j) {
    reject_unknown(j, {"scheme", "dt_init", "rel_tol", "abs_tol", "t_max", "convergence_tol", "record_every"},
                   "integration");
    IntegrationOptions o;
    if (j.contains("scheme")) {
        const std::string s = text(j["scheme"], "integration.scheme");
        if (s == "rk45") {
            o.scheme = Scheme::AdaptiveRK45;
        } else if (s == "rk4") {
            o.scheme = Scheme::FixedStepRK4;
        } else {
            throw ConfigError("integration.scheme: expected \"rk45\" or \"rk4\"");
        }
    }
    if (j.contains("dt_init")) o.dt_init = positive(j["dt_init"], "integration.dt_init");
    if (j.contains("rel_tol")) o.rel_tol = positive(j["rel_tol"], "integration.rel_tol");
    if (j.contains("abs_tol")) o.abs_tol = positive(j["abs_tol"], "integration.abs_tol");
    if (j.contains("t_max")) o.t_max = positive(j["t_max"], "integration.t_max");
    if (j.contains("convergence_tol")) o.convergence_tol = positive(j["convergence_tol"], "integration.convergence_tol");
    if (j.contains("record_every")) o.record_every = positive(j["record_every"], "integration.record_every");
    try {
        o.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(std::string("integration.") + e.what());
    }
    return o;
}

template <class T>
T require(const json& j, const char* key, T (*conv)(const json&, const std::string&)) {
    if (!j.contains(key)) throw ConfigError(std::string(key) + ": missing");
    return conv(j[key], key);
}

void check_market(double gamma, const std::vector<double>& a) {
    try {
        MarketParams p(gamma, a);
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
}

SimulateConfig simulate(const json& j) {
    SimulateConfig c;
    c.gamma = require(j, "gamma", positive);
    if (!j.contains("a")) throw ConfigError("a: missing");
    c.a = attractiveness(j["a"]);
    check_market(c.gamma, c.a);
    if (!j.contains("initial_state")) throw ConfigError("initial_state: missing");
    c.initial_state = numbers(j["initial_state"], "initial_state");
    if (c.initial_state.size() != c.a.size()) {
        throw ConfigError("initial_state: expected " + std::to_string(c.a.size()) + " entries");
    }
    if (j.contains("integration")) c.integration = integration(j["integration"]);
    return c;
}

EquilibriaConfig equilibria(const json& j) {
    EquilibriaConfig c;
    if (j.contains("solver")) c.solver = text(j["solver"], "solver");
    static const std::set<std::string> solvers{"auto", "homogeneous", "two_seller", "two_cluster", "general"};
    if (!solvers.count(c.solver)) {
        throw ConfigError("solver: expected one of auto, homogeneous, two_seller, two_cluster, general");
    }
    if (j.contains("gamma")) c.gamma = positive(j["gamma"], "gamma");
    if (j.contains("a")) c.a = attractiveness(j["a"]);
    if (j.contains("cluster")) c.cluster = cluster(j["cluster"]);
    if (j.contains("starts")) {
        c.starts = static_cast<std::size_t>(unsigned_int(j["starts"], "starts"));
        if (c.starts < 1) throw ConfigError("starts: must be at least 1");
    }
    if (!c.gamma) throw ConfigError("gamma: missing");
    const bool automatic = c.solver == "auto";
    if (automatic) c.solver = c.cluster ? "two_cluster" : (c.a.size() == 2 ? "two_seller" : "general");
    if (c.solver == "two_cluster") {
        if (!c.cluster) throw ConfigError("cluster: required by the two_cluster solver");
        return c;
    }
    if (c.a.empty()) throw ConfigError("a: missing");
    check_market(*c.gamma, c.a);
    const MarketParams p(*c.gamma, c.a);
    if (automatic && c.solver == "general" && p.is_homogeneous()) c.solver = "homogeneous";
    if (c.solver == "homogeneous" && !p.is_homogeneous()) {
        throw ConfigError("solver: homogeneous solver requires equal attractiveness");
    }
    if (c.solver == "homogeneous" && p.n() > 25) throw ConfigError("a: homogeneous enumeration is limited to 25 sellers");
    if (c.solver == "two_seller" && p.n() != 2) throw ConfigError("solver: two_seller solver requires exactly two sellers");
    return c;
}

SweepConfig sweep(const json& j) {
    SweepConfig c;
    if (!j.contains("regime")) throw ConfigError("regime: missing");
    const std::string r = text(j["regime"], "regime");
    if (r == "homogeneous") {
        c.regime = RegimeTag::Homogeneous;
    } else if (r == "two_seller") {
        c.regime = RegimeTag::TwoSeller;
    } else if (r == "two_cluster") {
        c.regime = RegimeTag::TwoCluster;
    } else {
        throw ConfigError("regime: expected homogeneous, two_seller or two_cluster");
    }
    if (j.contains("a")) c.a = attractiveness(j["a"]);
    if (j.contains("cluster")) c.cluster = cluster(j["cluster"]);
    if (c.regime == RegimeTag::TwoCluster && !c.cluster) throw ConfigError("cluster: required by the two_cluster regime");
    if (c.regime != RegimeTag::TwoCluster) {
        if (c.a.empty()) throw ConfigError("a: missing");
        const MarketParams p(1.0, c.a);
        if (c.regime == RegimeTag::Homogeneous && !p.is_homogeneous()) {
            throw ConfigError("a: homogeneous regime requires equal attractiveness");
        }
        if (c.regime == RegimeTag::Homogeneous && p.n() > 25) throw ConfigError("a: homogeneous regime is limited to 25 sellers");
        if (c.regime == RegimeTag::TwoSeller && p.n() != 2) throw ConfigError("a: two_seller regime requires two sellers");
    }
    if (!j.contains("grid")) throw ConfigError("grid: missing");
    const json& g = j["grid"];
    reject_unknown(g, {"lo", "hi", "count", "spacing", "values"}, "grid");
    if (g.contains("values")) {
        if (g.contains("lo") || g.contains("hi") || g.contains("count") || g.contains("spacing")) {
            throw ConfigError("grid.values: cannot be combined with lo/hi/count/spacing");
        }
        c.grid = numbers(g["values"], "grid.values");
        if (c.grid.size() < 2) throw ConfigError("grid.values: need at least two values");
        for (std::size_t i = 0; i < c.grid.size(); ++i) {
            if (!(c.grid[i] > 0.0)) throw ConfigError("grid.values: must be positive");
            if (i && !(c.grid[i] > c.grid[i - 1])) throw ConfigError("grid.values: must be strictly increasing");
        }
        return c;
    }
    if (!g.contains("lo")) throw ConfigError("grid.lo: missing");
    if (!g.contains("hi")) throw ConfigError("grid.hi: missing");
    const double lo = positive(g["lo"], "grid.lo");
    const double hi = positive(g["hi"], "grid.hi");
    if (!(hi > lo)) throw ConfigError("grid.hi: must exceed grid.lo");
    std::size_t count = 200;
    if (g.contains("count")) count = static_cast<std::size_t>(unsigned_int(g["count"], "grid.count"));
    if (count < 2) throw ConfigError("grid.count: need at least two points");
    const std::string spacing = g.contains("spacing") ? text(g["spacing"], "grid.spacing") : "geometric";
    if (spacing == "geometric") {
        c.grid = geometric_grid(lo, hi, count);
    } else if (spacing == "linear") {
        for (std::size_t i = 0; i < count; ++i) c.grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
        c.grid.back() = hi;
    } else {
        throw ConfigError("grid.spacing: expected \"geometric\" or \"linear\"");
    }
    return c;
}

StreamfieldConfig streamfield(const json& j) {
    StreamfieldConfig c;
    c.gamma = require(j, "gamma", positive);
    if (!j.contains("a")) throw ConfigError("a: missing");
    c.a = attractiveness(j["a"]);
    check_market(c.gamma, c.a);
    if (c.a.size() != 3) throw ConfigError("a: the stream field needs exactly three sellers");
    if (j.contains("base")) {
        c.base = static_cast<std::size_t>(unsigned_int(j["base"], "base"));
        if (c.base < 1 || c.base > 3) throw ConfigError("base: expected a seller label in 1..3");
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        reject_unknown(g, {"lo", "hi", "count"}, "grid");
        if (g.contains("lo")) c.lo = number(g["lo"], "grid.lo");
        if (g.contains("hi")) c.hi = number(g["hi"], "grid.hi");
        if (g.contains("count")) c.count = static_cast<std::size_t>(unsigned_int(g["count"], "grid.count"));
    }
    if (!(c.hi > c.lo)) throw ConfigError("grid.hi: must exceed grid.lo");
    if (c.count < 2) throw ConfigError("grid.count: need at least two points");
    return c;
}

VerifyConfig verify(const json& j) {
    VerifyConfig c;
    if (j.contains("gamma")) c.gamma = positive(j["gamma"], "gamma");
    if (j.contains("a")) c.a = attractiveness(j["a"]);
    if (j.contains("cluster")) c.cluster = cluster(j["cluster"]);
    if (c.gamma.has_value() != !c.a.empty()) throw ConfigError(c.gamma ? "a: missing" : "gamma: missing");
    if (c.gamma) check_market(*c.gamma, c.a);
    if (!c.gamma && !c.cluster) throw ConfigError("gamma: a market (gamma and a) or a cluster is required");
    if (j.contains("checks")) {
        if (!j["checks"].is_array()) throw ConfigError("checks: expected an array of names");
        const auto& names = check_names();
        for (const auto& n : j["checks"]) {
            const std::string name = text(n, "checks");
            if (std::find(names.begin(), names.end(), name) == names.end()) {
                throw ConfigError("checks: unknown check '" + name + "'");
            }
            c.checks.push_back(name);
        }
    }
    if (j.contains("trials")) {
        c.trials = static_cast<std::size_t>(unsigned_int(j["trials"], "trials"));
        if (c.trials < 1) throw ConfigError("trials: must be at least 1");
    }
    if (j.contains("horizon")) c.horizon = positive(j["horizon"], "horizon");
    if (j.contains("field_bias")) c.field_bias = number(j["field_bias"], "field_bias");
    if (j.contains("integration")) c.integration = integration(j["integration"]);
    return c;
}

}  // namespace

json load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot read " + path);
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
}

std::vector<double> parse_number_list(const std::string& s, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const char* begin = item.c_str();
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(begin, &end);
        while (end && *end == ' ') ++end;
        if (item.empty() || end == begin || *end != '\0' || errno == ERANGE) {
            throw ConfigError(field + ": cannot parse '" + item + "' as a number");
        }
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(field + ": empty list");
    return out;
}

RunConfig resolve(const std::string& command, const json& config) {
    static const std::set<std::string> common{"out", "format", "seed", "threads"};
    std::set<std::string> allowed = common;
    if (command == "simulate") {
        allowed.insert({"gamma", "a", "initial_state", "integration"});
    } else if (command == "equilibria") {
        allowed.insert({"gamma", "a", "solver", "cluster", "starts"});
    } else if (command == "sweep") {
        allowed.insert({"a", "regime", "cluster", "grid"});
    } else if (command == "streamfield") {
        allowed.insert({"gamma", "a", "base", "grid"});
    } else if (command == "verify") {
        allowed.insert({"gamma", "a", "cluster", "checks", "trials", "horizon", "field_bias", "integration"});
    } else {
        throw ConfigError("command: unknown command '" + command + "'");
    }
    reject_unknown(config, allowed, "");

    RunConfig rc;
    rc.command = command;
    if (!config.contains("out")) throw ConfigError("out: output path is required");
    rc.out = text(config["out"], "out");
    if (rc.out.empty()) throw ConfigError("out: output path is required");
    if (config.contains("format")) rc.format = text(config["format"], "format");
    if (rc.format != "csv" && rc.format != "json") throw ConfigError("format: expected \"csv\" or \"json\"");
    if (command == "verify" && rc.format != "json") {
        if (config.contains("format")) throw ConfigError("format: verify writes JSON only");
        rc.format = "json";
    }
    if (config.contains("seed")) rc.seed = unsigned_int(config["seed"], "seed");
    if (config.contains("threads")) {
        const auto t = unsigned_int(config["threads"], "threads");
        if (t < 1 || t > 1024) throw ConfigError("threads: expected 1..1024");
        rc.threads = static_cast<unsigned>(t);
    }

    if (command == "simulate") rc.payload = simulate(config);
    else if (command == "equilibria") rc.payload = equilibria(config);
    else if (command == "sweep") rc.payload = sweep(config);
    else if (command == "streamfield") rc.payload = streamfield(config);
    else rc.payload = verify(config);
    return rc;
}

}  // namespace wkh::cli

#include "wkh/cli.hpp"

#include "config.hpp"
#include "output.hpp"

#include "wkh/bifurcation.hpp"
#include "wkh/equilibria.hpp"
#include "wkh/errors.hpp"
#include "wkh/integrator.hpp"
#include "wkh/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <ostream>

namespace wkh::cli {

using nlohmann::json;

namespace {

enum class Kind { Number, NumberList, Text, TextList, Integer, Cluster };

struct FlagSpec {
    const char* flag;
    const char* pointer;  // JSON pointer into the config
    Kind kind;
    const char* help;
};

const std::vector<FlagSpec> kCommon{
    {"--out", "/out", Kind::Text, "output path"},
    {"--format", "/format", Kind::Text, "csv or json"},
    {"--seed", "/seed", Kind::Integer, "random seed"},
    {"--threads", "/threads", Kind::Integer, "worker threads"},
};

const std::map<std::string, std::vector<FlagSpec>> kFlags{
    {"simulate",
     {{"--gamma", "/gamma", Kind::Number, "friction"},
      {"--a", "/a", Kind::NumberList, "attractiveness, comma separated"},
      {"--initial-state", "/initial_state", Kind::NumberList, "initial preferences, comma separated"},
      {"--scheme", "/integration/scheme", Kind::Text, "rk45 or rk4"},
      {"--dt-init", "/integration/dt_init", Kind::Number, "initial (or fixed) step"},
      {"--rel-tol", "/integration/rel_tol", Kind::Number, "relative tolerance"},
      {"--abs-tol", "/integration/abs_tol", Kind::Number, "absolute tolerance"},
      {"--t-max", "/integration/t_max", Kind::Number, "time horizon"},
      {"--record-every", "/integration/record_every", Kind::Number, "sampling interval"}}},
    {"equilibria",
     {{"--gamma", "/gamma", Kind::Number, "friction"},
      {"--a", "/a", Kind::NumberList, "attractiveness, comma separated"},
      {"--solver", "/solver", Kind::Text, "auto, homogeneous, two_seller, two_cluster or general"},
      {"--cluster", "/cluster", Kind::Cluster, "n,k,a_low,a_high"},
      {"--starts", "/starts", Kind::Integer, "Newton starts for the general solver"}}},
    {"sweep",
     {{"--regime", "/regime", Kind::Text, "homogeneous, two_seller or two_cluster"},
      {"--a", "/a", Kind::NumberList, "attractiveness, comma separated"},
      {"--cluster", "/cluster", Kind::Cluster, "n,k,a_low,a_high"},
      {"--gamma-lo", "/grid/lo", Kind::Number, "smallest friction"},
      {"--gamma-hi", "/grid/hi", Kind::Number, "largest friction"},
      {"--gamma-count", "/grid/count", Kind::Integer, "grid points"},
      {"--spacing", "/grid/spacing", Kind::Text, "geometric or linear"}}},
    {"streamfield",
     {{"--gamma", "/gamma", Kind::Number, "friction"},
      {"--a", "/a", Kind::NumberList, "attractiveness of the three sellers"},
      {"--base", "/base", Kind::Integer, "reference seller (1-3)"},
      {"--grid-lo", "/grid/lo", Kind::Number, "lower edge of the difference window"},
      {"--grid-hi", "/grid/hi", Kind::Number, "upper edge of the difference window"},
      {"--grid-count", "/grid/count", Kind::Integer, "grid points per axis"}}},
    {"verify",
     {{"--gamma", "/gamma", Kind::Number, "friction"},
      {"--a", "/a", Kind::NumberList, "attractiveness, comma separated"},
      {"--cluster", "/cluster", Kind::Cluster, "n,k,a_low,a_high"},
      {"--checks", "/checks", Kind::TextList, "check names, comma separated"},
      {"--trials", "/trials", Kind::Integer, "trials per check"},
      {"--horizon", "/horizon", Kind::Number, "integration horizon"},
      {"--field-bias", "/field_bias", Kind::Number, ""}}},
};

json to_json_value(const FlagSpec& spec, const std::string& value) {
    const std::string field = std::string(spec.flag).substr(2);
    switch (spec.kind) {
        case Kind::Number: return parse_number_list(value, field).at(0) * 1.0;
        case Kind::NumberList: return parse_number_list(value, field);
        case Kind::Text: return value;
        case Kind::TextList: {
            json out = json::array();
            std::size_t pos = 0;
            while (pos <= value.size()) {
                const std::size_t comma = std::min(value.find(',', pos), value.size());
                out.push_back(value.substr(pos, comma - pos));
                pos = comma + 1;
            }
            return out;
        }
        case Kind::Integer: {
            char* end = nullptr;
            if (value.empty() || value[0] == '-') throw ConfigError(field + ": expected a non-negative integer");
            const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
            if (*end != '\0') throw ConfigError(field + ": expected a non-negative integer");
            return static_cast<std::uint64_t>(v);
        }
        case Kind::Cluster: {
            const auto v = parse_number_list(value, field);
            if (v.size() != 4 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]) || v[0] < 0 || v[1] < 0) {
                throw ConfigError("cluster: expected n,k,a_low,a_high");
            }
            return json{{"n", static_cast<std::uint64_t>(v[0])},
                        {"k", static_cast<std::uint64_t>(v[1])},
                        {"a_low", v[2]},
                        {"a_high", v[3]}};
        }
    }
    return nullptr;
}

std::vector<double> original(const MarketParams& p, const Vector& sorted) {
    const Vector v = p.to_original_order(sorted);
    return {v.data(), v.data() + v.size()};
}

std::vector<std::string> j_header(std::size_t n) {
    std::vector<std::string> h;
    for (std::size_t i = 1; i <= n; ++i) h.push_back("J_" + std::to_string(i));
    return h;
}

void write_main(const RunConfig& rc, const std::string& csv, const json& j) {
    write_atomic(rc.out, rc.format == "csv" ? csv : dump(j));
}

int cmd_simulate(const RunConfig& rc, const SimulateConfig& c, std::ostream& out) {
    const MarketParams p(c.gamma, c.a);
    Vector s0(static_cast<Eigen::Index>(p.n()));
    for (std::size_t i = 0; i < p.n(); ++i) s0(static_cast<Eigen::Index>(i)) = c.initial_state[p.permutation()[i]];
    const Trajectory tr = integrate(p, PreferenceState(s0), c.integration);

    std::vector<std::string> header{"t"};
    for (auto& h : j_header(p.n())) header.push_back(h);
    header.push_back("residual");
    CsvWriter csv(header);
    json rows = json::array();
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const auto j = original(p, tr.states[k].values());
        const double r = simplex_residual(p, tr.states[k]);
        std::vector<std::string> cells{fmt(tr.times[k])};
        for (double v : j) cells.push_back(fmt(v));
        cells.push_back(fmt(r));
        csv.row(cells);
        rows.push_back(json{{"t", tr.times[k]}, {"J", j}, {"residual", r}});
    }
    write_main(rc, csv.text(), json{{"gamma", c.gamma}, {"a", c.a}, {"samples", rows}});

    json events = json::array();
    for (const auto& e : tr.events) {
        json ev{{"time", e.time}};
        if (const auto* f = std::get_if<OrderingFlip>(&e.kind)) {
            std::size_t l1 = p.permutation()[f->i] + 1;
            std::size_t l2 = p.permutation()[f->j] + 1;
            if (l1 > l2) std::swap(l1, l2);
            ev["kind"] = "ordering_flip";
            ev["sellers"] = {l1, l2};
        } else if (const auto* t = std::get_if<EnteredTrappingSet>(&e.kind)) {
            ev["kind"] = "entered_trapping_set";
            ev["top"] = p.permutation()[t->top] + 1;
        } else {
            ev["kind"] = "converged";
        }
        events.push_back(ev);
    }
    json side{{"events", events},
              {"termination", tr.converged() ? "converged" : "t_max"},
              {"converged_to", tr.converged_to ? json(original(p, tr.converged_to->values())) : json()},
              {"t_max", tr.t_max},
              {"accepted_steps", tr.accepted_steps},
              {"rejected_steps", tr.rejected_steps}};
    write_atomic(rc.out + ".events.json", dump(side));
    out << "simulate: " << tr.times.size() << " samples, " << (tr.converged() ? "converged" : "reached t_max") << "\n";
    return kOk;
}

json point_json(const StationaryPoint& pt, const std::vector<double>& state) {
    json ev = json::array();
    for (const auto& z : pt.eigenvalues) ev.push_back({z.real(), z.imag()});
    return json{{"state", state},
                {"residual", pt.residual},
                {"eigenvalues", ev},
                {"stability", to_string(pt.stability)},
                {"reduced_stability", pt.reduced_stability ? json(to_string(*pt.reduced_stability)) : json()},
                {"provenance",
                 {{"source", to_string(pt.provenance.source)},
                  {"k", pt.provenance.k},
                  {"sign", pt.provenance.sign},
                  {"label", pt.provenance.label}}}};
}

int cmd_equilibria(const RunConfig& rc, const EquilibriaConfig& c, std::ostream& out) {
    std::vector<StationaryPoint> points;
    json meta{{"solver", c.solver}, {"gamma", *c.gamma}};
    std::optional<MarketParams> market;
    if (c.solver == "two_cluster") {
        points = solve_two_cluster(*c.cluster, *c.gamma);
        meta["cluster"] = {{"n", c.cluster->n}, {"k", c.cluster->k}, {"a_low", c.cluster->a_low}, {"a_high", c.cluster->a_high}};
    } else {
        market.emplace(*c.gamma, c.a);
        meta["a"] = c.a;
        if (c.solver == "homogeneous") {
            auto set = solve_homogeneous(*market);
            meta["gamma_critical"] = set.gamma_critical;
            meta["uniqueness_gamma"] = set.uniqueness_gamma;
            points = std::move(set.points);
        } else if (c.solver == "two_seller") {
            points = solve_two_seller(*market);
        } else {
            auto sol = solve_general(*market, c.starts, rc.seed, rc.threads);
            meta["starts"] = c.starts;
            meta["seed"] = rc.seed;
            meta["converged_starts"] = sol.converged_starts;
            meta["failed_starts"] = sol.failed_starts;
            meta["heuristic"] = sol.heuristic;
            points = std::move(sol.points);
        }
    }

    const std::size_t n = points.empty() ? (market ? market->n() : c.cluster->n) : points.front().state.size();
    std::vector<std::string> header = j_header(n);
    for (const char* h : {"residual", "max_real_eigenvalue", "min_real_eigenvalue", "stability", "reduced_stability",
                          "source", "label"}) {
        header.push_back(h);
    }
    CsvWriter csv(header);
    json rows = json::array();
    for (const auto& pt : points) {
        const std::vector<double> state = market ? original(*market, pt.state.values())
                                                 : std::vector<double>(pt.state.values().data(),
                                                                       pt.state.values().data() + pt.state.size());
        std::vector<std::string> cells;
        for (double v : state) cells.push_back(fmt(v));
        cells.push_back(fmt(pt.residual));
        cells.push_back(fmt(pt.eigenvalues.front().real()));
        cells.push_back(fmt(pt.eigenvalues.back().real()));
        cells.push_back(to_string(pt.stability));
        cells.push_back(pt.reduced_stability ? to_string(*pt.reduced_stability) : "");
        cells.push_back(to_string(pt.provenance.source));
        cells.push_back(pt.provenance.label);
        csv.row(cells);
        rows.push_back(point_json(pt, state));
    }
    meta["points"] = rows;
    write_main(rc, csv.text(), meta);
    out << "equilibria: " << points.size() << " points\n";
    return kOk;
}

int cmd_sweep(const RunConfig& rc, const SweepConfig& c, std::ostream& out) {
    SweepFamily fam{c.regime, c.a, c.cluster};
    const BifurcationDiagram d = sweep(fam, c.grid, rc.threads);
    CsvWriter csv({"gamma", "branch", "delta", "stability"});
    json rows = json::array();
    for (std::size_t i = 0; i < d.gammas.size(); ++i) {
        for (const auto& bp : d.points[i]) {
            csv.row({fmt(d.gammas[i]), bp.branch, fmt(bp.delta), to_string(bp.stability)});
            rows.push_back(json{{"gamma", d.gammas[i]}, {"branch", bp.branch}, {"delta", bp.delta},
                                {"stability", to_string(bp.stability)}});
        }
    }
    json thresholds = json::array();
    for (const auto& t : d.thresholds) thresholds.push_back(json{{"gamma", t.gamma}, {"kind", to_string(t.kind)}});
    json side{{"regime", to_string(c.regime)},
              {"grid", {{"lo", c.grid.front()}, {"hi", c.grid.back()}, {"count", c.grid.size()}}},
              {"thresholds", thresholds},
              {"regime_string", d.regime_string}};
    json main = side;
    main["points"] = rows;
    write_main(rc, csv.text(), main);
    write_atomic(rc.out + ".thresholds.json", dump(side));
    out << "sweep: " << d.thresholds.size() << " thresholds, regime " << d.regime_string << "\n";
    return kOk;
}

int cmd_streamfield(const RunConfig& rc, const StreamfieldConfig& c, std::ostream& out) {
    const MarketParams p(c.gamma, c.a);
    const auto& perm = p.permutation();
    auto sorted_of = [&](std::size_t original_index) {
        return static_cast<std::size_t>(std::find(perm.begin(), perm.end(), original_index) - perm.begin());
    };
    const std::size_t base_orig = c.base - 1;
    std::vector<std::size_t> axes;
    for (std::size_t o = 0; o < 3; ++o) {
        if (o != base_orig) axes.push_back(o);
    }
    const std::size_t base_sorted = sorted_of(base_orig);
    // Slot of each axis inside the sorted DeltaState.
    std::vector<std::size_t> slots;
    for (std::size_t o : axes) {
        const std::size_t s = sorted_of(o);
        slots.push_back(s < base_sorted ? s : s - 1);
    }

    const std::string d1 = std::to_string(axes[0] + 1);
    const std::string d2 = std::to_string(axes[1] + 1);
    const std::vector<std::string> header{"delta_" + d1, "delta_" + d2, "G_" + d1, "G_" + d2};
    CsvWriter csv(header);
    json rows = json::array();
    std::vector<double> grid(c.count);
    for (std::size_t i = 0; i < c.count; ++i) {
        grid[i] = c.lo + (c.hi - c.lo) * static_cast<double>(i) / static_cast<double>(c.count - 1);
    }
    grid.back() = c.hi;
    Vector d(2);
    for (double x : grid) {
        for (double y : grid) {
            d(static_cast<Eigen::Index>(slots[0])) = x;
            d(static_cast<Eigen::Index>(slots[1])) = y;
            const Vector g = delta_field(p, DeltaState(base_sorted, d));
            const double g1 = g(static_cast<Eigen::Index>(slots[0]));
            const double g2 = g(static_cast<Eigen::Index>(slots[1]));
            if (rc.format == "csv") {
                csv.row({fmt(x), fmt(y), fmt(g1), fmt(g2)});
            } else {
                rows.push_back({x, y, g1, g2});
            }
        }
    }
    write_main(rc, csv.text(),
               json{{"gamma", c.gamma}, {"a", c.a}, {"base", c.base}, {"columns", header}, {"rows", rows}});
    out << "streamfield: " << c.count << "x" << c.count << " grid\n";
    return kOk;
}

int cmd_verify(const RunConfig& rc, const VerifyConfig& c, std::ostream& out) {
    SuiteConfig sc;
    if (c.gamma) sc.market.emplace(*c.gamma, c.a);
    sc.cluster = c.cluster;
    sc.only = c.checks;
    sc.options.seed = rc.seed;
    sc.options.trials = c.trials;
    sc.options.horizon = c.horizon;
    sc.options.integration = c.integration;
    sc.options.threads = rc.threads;
    sc.options.field_bias = c.field_bias;
    const auto reports = run_suite(sc);

    bool passed = !reports.empty();
    json list = json::array();
    for (const auto& r : reports) {
        passed = passed && r.passed;
        list.push_back(r.to_json());
        out << (r.passed ? "PASS " : "FAIL ") << r.name << "\n";
    }
    write_atomic(rc.out, dump(json{{"passed", passed}, {"reports", list}}));
    return passed ? kOk : kFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Preference dynamics of a market with N sellers"};
    app.require_subcommand(1);
    std::string config_path;
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, CLI::App*> subs;

    const std::map<std::string, std::string> descriptions{
        {"simulate", "integrate a trajectory"},
        {"equilibria", "enumerate stationary points"},
        {"sweep", "sweep the friction and locate thresholds"},
        {"streamfield", "export the difference-plane vector field for three sellers"},
        {"verify", "run the verification suite"}};
    for (const auto& [name, flags] : kFlags) {
        CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
        sub->add_option("--config", config_path, "JSON config file");
        for (const auto* set : {&kCommon, &flags}) {
            for (const auto& f : *set) {
                CLI::Option* opt = sub->add_option(f.flag, values[name][f.flag], f.help);
                if (std::string(f.help).empty()) opt->group("");
            }
        }
        subs[name] = sub;
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    std::string command;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) command = name;
    }

    RunConfig rc;
    try {
        json config = config_path.empty() ? json::object() : load_config_file(config_path);
        if (!config.is_object()) throw ConfigError("config: expected a JSON object");
        for (const auto* set : {&kCommon, &kFlags.at(command)}) {
            for (const auto& f : *set) {
                if (subs[command]->count(f.flag) == 0) continue;
                config[json::json_pointer(f.pointer)] = to_json_value(f, values[command][f.flag]);
            }
        }
        rc = resolve(command, config);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        return std::visit(
            [&](const auto& payload) -> int {
                using T = std::decay_t<decltype(payload)>;
                if constexpr (std::is_same_v<T, SimulateConfig>) return cmd_simulate(rc, payload, out);
                else if constexpr (std::is_same_v<T, EquilibriaConfig>) return cmd_equilibria(rc, payload, out);
                else if constexpr (std::is_same_v<T, SweepConfig>) return cmd_sweep(rc, payload, out);
                else if constexpr (std::is_same_v<T, StreamfieldConfig>) return cmd_streamfield(rc, payload, out);
                else return cmd_verify(rc, payload, out);
            },
            rc.payload);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

}  // namespace wkh::cli

#include "wkh/verify.hpp"

#include "wkh/bifurcation.hpp"
#include "wkh/equilibria.hpp"
#include "wkh/errors.hpp"
#include "wkh/parallel.hpp"
#include "wkh/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace wkh {

using nlohmann::json;

namespace {

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json market_json(const MarketParams& p) { return json{{"gamma", p.gamma()}, {"a", vec_json(p.a())}}; }

json cluster_json(const ClusterSpec& c) {
    return json{{"n", c.n}, {"k", c.k}, {"a_low", c.a_low}, {"a_high", c.a_high}};
}

double horizon_of(const MarketParams& p, const CheckOptions& opts) {
    return opts.horizon ? *opts.horizon : 200.0 / p.gamma();
}

json options_json(const MarketParams& p, const CheckOptions& opts) {
    return json{{"trials", opts.trials}, {"horizon", horizon_of(p, opts)}, {"field_bias", opts.field_bias}};
}

Trajectory run(const MarketParams& p, const PreferenceState& s0, const CheckOptions& opts) {
    IntegrationOptions io = opts.integration;
    io.t_max = horizon_of(p, opts);
    if (opts.field_bias == 0.0) return integrate(p, s0, io);
    const double bias = opts.field_bias;
    const FieldFn field = [&p, bias](const Vector& j, Vector& out) {
        detail::field_into(p, j, out);
        out.array() += bias;
    };
    return integrate_field(p, field, s0, io);
}

// Uniform initial condition in [0, a_max / gamma]^N for one trial.
PreferenceState random_start(const MarketParams& p, std::uint64_t seed, std::size_t trial) {
    StreamRng rng(seed, trial);
    Vector j(static_cast<Eigen::Index>(p.n()));
    for (Eigen::Index i = 0; i < j.size(); ++i) j(i) = rng.uniform(0.0, p.a_max() / p.gamma());
    return PreferenceState(std::move(j));
}

CheckReport start(const std::string& name, json params, std::uint64_t seed) {
    CheckReport r;
    r.name = name;
    r.params = std::move(params);
    r.seed = seed;
    r.details = json::object();
    r.reproducer = nullptr;
    return r;
}

// Runs body(report); any library error turns into a failed report.
CheckReport guarded(CheckReport report, const std::function<void(CheckReport&)>& body) {
    try {
        body(report);
    } catch (const std::exception& e) {
        report.passed = false;
        report.details["error"] = e.what();
        if (report.reproducer.is_null()) report.reproducer = json{{"params", report.params}, {"seed", report.seed}};
    }
    return report;
}

// Per-trial results of a trajectory-based check.
struct TrialOutcome {
    bool ok = true;
    double margin = -std::numeric_limits<double>::infinity();
    json note;
};

template <class Fn>
std::vector<TrialOutcome> run_trials(const CheckOptions& opts, Fn&& fn) {
    std::vector<TrialOutcome> out(opts.trials);
    parallel_for(opts.trials, opts.threads, [&](std::size_t i) { out[i] = fn(i); });
    return out;
}

void summarize(CheckReport& r, const std::vector<TrialOutcome>& outcomes, const MarketParams& p,
               const CheckOptions& opts) {
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t failures = 0;
    std::optional<std::size_t> first_bad;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        worst = std::max(worst, outcomes[i].margin);
        if (!outcomes[i].ok) {
            ++failures;
            if (!first_bad) first_bad = i;
        }
    }
    r.details["trials"] = outcomes.size();
    r.details["failures"] = failures;
    if (std::isfinite(worst)) r.details["worst_margin"] = worst;
    r.passed = failures == 0;
    if (first_bad) {
        r.reproducer = json{{"params", market_json(p)},
                            {"seed", opts.seed},
                            {"trial", *first_bad},
                            {"initial_state", vec_json(random_start(p, opts.seed, *first_bad).values())},
                            {"observation", outcomes[*first_bad].note}};
    }
}

std::size_t root_count(const ClusterSpec& c, double gamma) { return ClusterField(c, gamma).roots().size(); }

}  // namespace

json CheckReport::to_json() const {
    return json{{"check", name},     {"params", params},   {"seed", seed},
                {"verdict", passed ? "pass" : "fail"}, {"details", details}, {"reproducer", reproducer}};
}

CheckReport check_simplex_decay(const MarketParams& p, const PreferenceState& s0, const CheckOptions& opts) {
    json params = market_json(p);
    params["initial_state"] = vec_json(s0.values());
    params["horizon"] = horizon_of(p, opts);
    params["field_bias"] = opts.field_bias;
    return guarded(start("simplex_decay", params, opts.seed), [&](CheckReport& r) {
        const Trajectory tr = run(p, s0, opts);
        const double r0 = simplex_residual(p, s0);
        const double bound = 100.0 * opts.integration.abs_tol;
        double worst = 0.0;
        std::size_t at = 0;
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            const double dev = std::abs(simplex_residual(p, tr.states[k]) - r0 * std::exp(-p.gamma() * tr.times[k]));
            if (dev > worst) {
                worst = dev;
                at = k;
            }
        }
        r.details = json{{"samples", tr.times.size()}, {"max_deviation", worst}, {"bound", bound}};
        r.passed = worst <= bound;
        if (!r.passed) {
            r.reproducer = json{{"params", market_json(p)},
                                {"seed", opts.seed},
                                {"initial_state", vec_json(s0.values())},
                                {"time", tr.times[at]},
                                {"state", vec_json(tr.states[at].values())}};
        }
    });
}

CheckReport check_gronwall_bound(const MarketParams& p, const PreferenceState& s0, const CheckOptions& opts) {
    json params = market_json(p);
    params["initial_state"] = vec_json(s0.values());
    params["horizon"] = horizon_of(p, opts);
    params["field_bias"] = opts.field_bias;
    return guarded(start("gronwall_bound", params, opts.seed), [&](CheckReport& r) {
        const Trajectory tr = run(p, s0, opts);
        const double slack = 10.0 * opts.integration.abs_tol;
        double worst = -std::numeric_limits<double>::infinity();
        std::size_t at = 0;
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            const double decay = std::exp(-p.gamma() * tr.times[k]);
            for (std::size_t i = 0; i < p.n(); ++i) {
                const double ai = p.a()(static_cast<Eigen::Index>(i));
                const double bound = s0[i] * decay + ai / p.gamma() * (1.0 - decay);
                const double excess = tr.states[k][i] - bound;
                if (excess > worst) {
                    worst = excess;
                    at = k;
                }
            }
        }
        r.details = json{{"samples", tr.times.size()}, {"max_excess", worst}, {"slack", slack}};
        r.passed = worst <= slack;
        if (!r.passed) {
            r.reproducer = json{{"params", market_json(p)},
                                {"seed", opts.seed},
                                {"initial_state", vec_json(s0.values())},
                                {"time", tr.times[at]},
                                {"state", vec_json(tr.states[at].values())}};
        }
    });
}

CheckReport check_monotone_ordering(const MarketParams& p, const CheckOptions& opts) {
    json params = market_json(p);
    params.update(options_json(p, opts));
    return guarded(start("monotone_ordering", params, opts.seed), [&](CheckReport& r) {
        auto sorted_start = [&](std::size_t i) {
            Vector j = random_start(p, opts.seed, i).values();
            std::sort(j.data(), j.data() + j.size());
            return PreferenceState(std::move(j));
        };
        const auto outcomes = run_trials(opts, [&](std::size_t i) {
            const Trajectory tr = run(p, sorted_start(i), opts);
            TrialOutcome o;
            std::size_t flips = 0;
            for (const auto& e : tr.events) flips += std::holds_alternative<OrderingFlip>(e.kind) ? 1 : 0;
            double disorder = -std::numeric_limits<double>::infinity();
            for (const auto& s : tr.states) {
                for (std::size_t k = 0; k + 1 < p.n(); ++k) disorder = std::max(disorder, s[k] - s[k + 1]);
            }
            o.margin = disorder;
            o.ok = flips == 0 && disorder <= opts.integration.flip_band;
            o.note = json{{"flips", flips}, {"max_disorder", disorder}};
            return o;
        });
        summarize(r, outcomes, p, opts);
        if (!r.reproducer.is_null()) {
            r.reproducer["initial_state"] = vec_json(sorted_start(r.reproducer["trial"].get<std::size_t>()).values());
        }
    });
}

CheckReport check_eventual_ordering(const MarketParams& p, const CheckOptions& opts) {
    json params = market_json(p);
    params.update(options_json(p, opts));
    return guarded(start("eventual_ordering", params, opts.seed), [&](CheckReport& r) {
        const double half = 0.5 * horizon_of(p, opts);
        const auto outcomes = run_trials(opts, [&](std::size_t i) {
            const Trajectory tr = run(p, random_start(p, opts.seed, i), opts);
            TrialOutcome o;
            double last = 0.0;
            std::size_t flips = 0;
            for (const auto& e : tr.events) {
                if (std::holds_alternative<OrderingFlip>(e.kind)) {
                    ++flips;
                    last = std::max(last, e.time);
                }
            }
            o.margin = last - half;
            o.ok = flips == 0 || last < half;
            o.note = json{{"flips", flips}, {"last_flip", last}, {"converged", tr.converged()}};
            return o;
        });
        summarize(r, outcomes, p, opts);
        r.details["cutoff"] = half;
    });
}

CheckReport check_trapping(const MarketParams& p, const CheckOptions& opts) {
    json params = market_json(p);
    params.update(options_json(p, opts));
    constexpr double tol = 1e-6;
    return guarded(start("trapping", params, opts.seed), [&](CheckReport& r) {
        const double burn_in = 0.5 * horizon_of(p, opts);
        const Vector log_a = p.a().array().log();
        auto excess = [&](const PreferenceState& s, std::size_t top) {
            const auto t = static_cast<Eigen::Index>(top);
            double worst = -std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < log_a.size(); ++i) {
                if (i == t) continue;
                worst = std::max(worst, s.values()(i) - s.values()(t) - (log_a(t) - log_a(i)));
            }
            return worst;
        };
        const auto outcomes = run_trials(opts, [&](std::size_t i) {
            const Trajectory tr = run(p, random_start(p, opts.seed, i), opts);
            const PreferenceState& last = tr.converged_to ? *tr.converged_to : tr.states.back();
            Eigen::Index top = 0;
            last.values().maxCoeff(&top);
            const auto leader = static_cast<std::size_t>(top);
            double last_flip = 0.0;
            for (const auto& e : tr.events) {
                if (std::holds_alternative<OrderingFlip>(e.kind)) last_flip = std::max(last_flip, e.time);
            }
            TrialOutcome o;
            o.margin = excess(last, leader);
            std::size_t checked = 1;
            std::size_t early_violations = 0;
            for (std::size_t k = 0; k < tr.times.size(); ++k) {
                if (tr.times[k] < last_flip) continue;
                const double m = excess(tr.states[k], leader);
                if (tr.times[k] >= burn_in) {
                    o.margin = std::max(o.margin, m);
                    ++checked;
                } else if (m > tol) {
                    ++early_violations;
                }
            }
            o.ok = o.margin <= tol;
            o.note = json{{"leader", leader},
                          {"samples_checked", checked},
                          {"last_flip", last_flip},
                          {"violations_before_burn_in", early_violations}};
            return o;
        });
        summarize(r, outcomes, p, opts);
        r.details["burn_in"] = burn_in;
        r.details["tolerance"] = tol;
    });
}

CheckReport check_cooperative_region(const MarketParams& p, const CheckOptions& opts) {
    json params = market_json(p);
    params["samples"] = opts.trials;
    return guarded(start("cooperative_region", params, opts.seed), [&](CheckReport& r) {
        const std::size_t n = p.n();
        constexpr double step = 1e-6;
        constexpr double floor = -1e-8;
        const auto outcomes = run_trials(opts, [&](std::size_t t) {
            StreamRng rng(opts.seed, t);
            const std::size_t base = rng.index(n);
            Vector d(static_cast<Eigen::Index>(n - 1));
            const double ab = p.a()(static_cast<Eigen::Index>(base));
            for (std::size_t slot = 0; slot + 1 < n; ++slot) {
                const std::size_t seller = slot < base ? slot : slot + 1;
                d(static_cast<Eigen::Index>(slot)) =
                    std::log(ab / p.a()(static_cast<Eigen::Index>(seller))) - rng.uniform(0.0, 6.0);
            }
            double lowest = std::numeric_limits<double>::infinity();
            for (Eigen::Index l = 0; l < d.size(); ++l) {
                Vector up = d;
                Vector down = d;
                up(l) += step;
                down(l) -= step;
                const Vector deriv = (delta_field(p, DeltaState(base, up)) - delta_field(p, DeltaState(base, down))) /
                                     (2.0 * step);
                for (Eigen::Index i = 0; i < d.size(); ++i) {
                    if (i != l) lowest = std::min(lowest, deriv(i));
                }
            }
            TrialOutcome o;
            o.margin = n > 2 ? -lowest : -std::numeric_limits<double>::infinity();
            o.ok = n <= 2 || lowest >= floor;
            o.note = json{{"base", base}, {"deltas", vec_json(d)}, {"min_off_diagonal", n > 2 ? json(lowest) : json()}};
            return o;
        });
        summarize(r, outcomes, p, opts);
        r.reproducer = r.passed ? json() : json{{"params", market_json(p)}, {"seed", opts.seed},
                                                {"trial", r.reproducer["trial"]},
                                                {"observation", r.reproducer["observation"]}};
        r.details["floor"] = floor;
    });
}

CheckReport check_convergence_census(const MarketParams& p, const CheckOptions& opts) {
    json params = market_json(p);
    params.update(options_json(p, opts));
    return guarded(start("convergence_census", params, opts.seed), [&](CheckReport& r) {
        std::vector<int> converged(opts.trials, 0);
        const auto outcomes = run_trials(opts, [&](std::size_t i) {
            const Trajectory tr = run(p, random_start(p, opts.seed, i), opts);
            TrialOutcome o;
            if (!tr.converged_to) {
                o.note = json{{"converged", false}};
                return o;
            }
            converged[i] = 1;
            // The limit must be a zero of the unmodified field.
            const double res = sup_norm(vector_field(p, *tr.converged_to));
            o.margin = res;
            o.ok = res < opts.integration.convergence_tol;
            o.note = json{{"converged", true}, {"limit", vec_json(tr.converged_to->values())}, {"residual", res}};
            return o;
        });
        summarize(r, outcomes, p, opts);
        std::size_t total = 0;
        for (int c : converged) total += static_cast<std::size_t>(c);
        r.details["converged"] = total;
        r.details["converged_fraction"] = opts.trials ? static_cast<double>(total) / static_cast<double>(opts.trials) : 0.0;
        std::vector<std::size_t> stragglers;
        for (std::size_t i = 0; i < converged.size(); ++i) {
            if (!converged[i]) stragglers.push_back(i);
        }
        r.details["non_converged_trials"] = stragglers;
    });
}

CheckReport check_homogeneous_census(const MarketParams& p) {
    return guarded(start("homogeneous_census", market_json(p), 0), [&](CheckReport& r) {
        const auto set = solve_homogeneous(p);
        const std::size_t n = p.n();
        const bool unique = p.gamma() >= set.gamma_critical;
        const std::size_t expected = unique ? 1 : (std::size_t{1} << n) - 1;
        const std::size_t expected_stable = unique ? 1 : n;

        std::size_t stable = 0;
        bool structure = true;
        double worst_residual = 0.0;
        for (const auto& pt : set.points) {
            worst_residual = std::max(worst_residual, pt.residual);
            if (pt.stability != Stability::Stable) continue;
            ++stable;
            if (unique) continue;
            // N-1 equal coordinates and one strictly larger.
            Vector v = pt.state.values();
            std::sort(v.data(), v.data() + v.size());
            const double spread = v(v.size() - 2) - v(0);
            structure = structure && spread <= 1e-9 && v(v.size() - 1) > v(v.size() - 2) + 1e-9;
        }
        r.details = json{{"points", set.points.size()},
                         {"expected_points", expected},
                         {"stable", stable},
                         {"expected_stable", expected_stable},
                         {"stable_structure", structure},
                         {"max_residual", worst_residual},
                         {"gamma_critical", set.gamma_critical},
                         {"uniqueness_gamma", set.uniqueness_gamma}};
        r.passed = set.points.size() == expected && stable == expected_stable && structure && worst_residual < 1e-10;
        if (!r.passed) {
            json pts = json::array();
            for (const auto& pt : set.points) {
                pts.push_back(json{{"state", vec_json(pt.state.values())},
                                   {"stability", to_string(pt.stability)},
                                   {"label", pt.provenance.label}});
            }
            r.reproducer = json{{"params", market_json(p)}, {"points", pts}};
        }
    });
}

CheckReport check_contraction(const MarketParams& p, const CheckOptions& opts) {
    json params = market_json(p);
    params.update(options_json(p, opts));
    return guarded(start("contraction", params, opts.seed), [&](CheckReport& r) {
        if (!contraction_certificate(p)) throw PreconditionError("contraction: requires gamma > a_N / 2");
        std::vector<std::optional<Vector>> limits(opts.trials);
        parallel_for(opts.trials, opts.threads, [&](std::size_t i) {
            const Trajectory tr = run(p, random_start(p, opts.seed, i), opts);
            if (tr.converged_to) limits[i] = tr.converged_to->values();
        });
        std::size_t missing = 0;
        std::optional<std::size_t> first;
        double spread = 0.0;
        std::optional<std::size_t> worst_trial;
        for (std::size_t i = 0; i < limits.size(); ++i) {
            if (!limits[i]) {
                ++missing;
                if (!worst_trial) worst_trial = i;
                continue;
            }
            if (!first) {
                first = i;
                continue;
            }
            const double d = sup_norm(*limits[i] - *limits[*first]);
            if (d > spread) {
                spread = d;
                if (d >= 1e-6) worst_trial = i;
            }
        }
        bool sorted = true;
        if (first) {
            const Vector& v = *limits[*first];
            for (Eigen::Index i = 0; i + 1 < v.size(); ++i) sorted = sorted && v(i) <= v(i + 1) + 1e-12;
        }
        r.details = json{{"trials", opts.trials}, {"non_converged", missing}, {"max_limit_distance", spread},
                         {"limit_sorted", sorted}};
        if (first) r.details["limit"] = vec_json(*limits[*first]);
        r.passed = missing == 0 && spread < 1e-6 && sorted && first.has_value();
        if (!r.passed) {
            const std::size_t t = worst_trial.value_or(first.value_or(0));
            r.reproducer = json{{"params", market_json(p)},
                                {"seed", opts.seed},
                                {"trial", t},
                                {"initial_state", vec_json(random_start(p, opts.seed, t).values())}};
        }
    });
}

CheckReport check_gradient_structure(const MarketParams& p, const CheckOptions& opts) {
    json params = market_json(p);
    params["samples"] = opts.trials;
    return guarded(start("gradient_structure", params, opts.seed), [&](CheckReport& r) {
        const bool homogeneous = p.is_homogeneous();
        const std::size_t n = p.n();
        constexpr double step = 1e-5;
        const auto outcomes = run_trials(opts, [&](std::size_t t) {
            StreamRng rng(opts.seed, t);
            Vector j(static_cast<Eigen::Index>(n));
            for (Eigen::Index i = 0; i < j.size(); ++i) j(i) = rng.uniform(-3.0, 3.0) + p.a_max() / (n * p.gamma());
            const PreferenceState s(j);
            const Vector f = vector_field(p, s);
            const Matrix jac = jacobian(p, s);
            Matrix fd(jac.rows(), jac.cols());
            Vector grad(j.size());
            for (Eigen::Index l = 0; l < j.size(); ++l) {
                Vector up = j;
                Vector down = j;
                up(l) += step;
                down(l) -= step;
                fd.col(l) = (vector_field(p, PreferenceState(up)) - vector_field(p, PreferenceState(down))) / (2 * step);
                if (homogeneous) {
                    grad(l) = (potential(p, PreferenceState(up)) - potential(p, PreferenceState(down))) / (2 * step);
                }
            }
            const double jac_err = (fd - jac).cwiseAbs().maxCoeff() / std::max(1.0, jac.cwiseAbs().maxCoeff());
            const double asym = (jac - jac.transpose()).cwiseAbs().maxCoeff();
            TrialOutcome o;
            o.note = json{{"jacobian_error", jac_err}, {"asymmetry", asym}};
            if (homogeneous) {
                const double grad_err = sup_norm(-grad - f) / std::max(1.0, sup_norm(f));
                o.note["gradient_error"] = grad_err;
                o.margin = std::max(jac_err, grad_err);
                o.ok = jac_err < 1e-6 && grad_err < 1e-6 && asym <= 1e-14 * std::max(1.0, p.a_max());
            } else {
                o.margin = jac_err;
                o.ok = jac_err < 1e-6;
            }
            return o;
        });
        summarize(r, outcomes, p, opts);
        if (!homogeneous) {
            double witness = 0.0;
            for (const auto& o : outcomes) witness = std::max(witness, o.note["asymmetry"].get<double>());
            r.details["max_asymmetry"] = witness;
            if (witness <= 1e-12) {
                r.passed = false;
                r.reproducer = json{{"params", market_json(p)}, {"seed", opts.seed}, {"observation", "no asymmetry witness"}};
            }
        }
        r.details["homogeneous"] = homogeneous;
    });
}

CheckReport check_two_seller_regimes(double a1, double a2) {
    json params{{"a", {a1, a2}}};
    return guarded(start("two_seller_regimes", params, 0), [&](CheckReport& r) {
        const double g = critical_gamma_two_seller(a1, a2);
        const double end = 0.25 * (a1 + a2);
        auto solve = [&](double gamma) { return solve_two_seller(MarketParams(gamma, {a1, a2})); };
        const auto above = solve(1.1 * g);
        const auto below = solve(0.9 * g);
        const auto at = solve(g);
        const auto just_above = solve(g + 1e-9);
        const auto just_below = solve(g - 1e-9);
        const auto far = solve(1.1 * end);

        std::size_t marginal = 0;
        for (const auto& pt : at) marginal += pt.stability == Stability::Marginal ? 1 : 0;
        const bool below_pattern = below.size() == 3 && below[0].stability == Stability::Stable &&
                                   below[1].stability == Stability::Unstable && below[2].stability == Stability::Stable;
        const bool far_ok = far.size() == 1 && far[0].stability == Stability::Stable &&
                            far[0].state[0] - far[0].state[1] < 0.0;
        r.details = json{{"gamma_star", g},
                         {"upper_bound", end},
                         {"count_above", above.size()},
                         {"count_below", below.size()},
                         {"count_at", at.size()},
                         {"marginal_at", marginal},
                         {"count_just_above", just_above.size()},
                         {"count_just_below", just_below.size()},
                         {"below_stability_pattern", below_pattern},
                         {"unique_point_beyond_bound", far_ok}};
        r.passed = g > 0.0 && g < end && above.size() == 1 && below.size() == 3 && at.size() == 2 && marginal == 1 &&
                   just_above.size() == 1 && just_below.size() == 3 && below_pattern && far_ok;
        if (!r.passed) r.reproducer = json{{"a", {a1, a2}}, {"gamma_star", g}};
    });
}

CheckReport check_two_cluster_regimes(const ClusterSpec& c) {
    return guarded(start("two_cluster_regimes", cluster_json(c), 0), [&](CheckReport& r) {
        const double A = cluster_A(c);
        const bool expect_nonmonotone = c.k > c.n - c.k && A > 0.0;
        const ClusterRegime regime = two_cluster_thresholds(c);
        const double end = ClusterField(c, 1.0).gamma_end();
        r.details = json{{"A", A}, {"gamma_end", end}, {"expected_nonmonotone", expect_nonmonotone}};

        std::vector<double> thresholds;
        std::vector<std::size_t> expected_counts;
        std::vector<double> probes;
        if (const auto* nm = std::get_if<NonMonotoneRegime>(&regime)) {
            thresholds = {nm->gamma1, nm->gamma2, nm->gamma3};
            expected_counts = {3, 1, 3, 1};
            probes = {0.5 * nm->gamma1, 0.5 * (nm->gamma1 + nm->gamma2), 0.5 * (nm->gamma2 + nm->gamma3),
                      0.5 * (nm->gamma3 + end)};
            r.details["regime"] = "non_monotone";
        } else {
            const double g = std::get<UnimodalRegime>(regime).gamma_star;
            thresholds = {g};
            expected_counts = {3, 1};
            probes = {0.5 * g, 0.5 * (g + end)};
            r.details["regime"] = "unimodal";
        }
        std::vector<std::size_t> counts;
        for (double g : probes) counts.push_back(root_count(c, g));
        bool ordered = thresholds.front() > 0.0 && thresholds.back() < end;
        for (std::size_t i = 1; i < thresholds.size(); ++i) ordered = ordered && thresholds[i - 1] < thresholds[i];
        bool crossings = true;
        for (double t : thresholds) crossings = crossings && root_count(c, t * (1 - 1e-3)) != root_count(c, t * (1 + 1e-3));

        r.details["thresholds"] = thresholds;
        r.details["interval_counts"] = counts;
        r.details["thresholds_ordered"] = ordered;
        r.details["counts_change_across_thresholds"] = crossings;
        const bool dichotomy = expect_nonmonotone == std::holds_alternative<NonMonotoneRegime>(regime);
        r.passed = dichotomy && ordered && crossings && counts == expected_counts;
        if (!r.passed) r.reproducer = json{{"cluster", cluster_json(c)}};
    });
}

const std::vector<ManifestEntry>& manifest() {
    static const std::vector<ManifestEntry> entries{
        {"simplex of weighted preferences is invariant and attracting", {"simplex_decay"}},
        {"trajectories are bounded by the exponential envelope", {"gronwall_bound"}},
        {"ordering concordant with attractiveness is preserved", {"monotone_ordering"}},
        {"coordinate ordering eventually becomes permanent", {"eventual_ordering"}},
        {"trajectories end in the trapping set of the eventual leader", {"trapping"}},
        {"difference dynamics are cooperative inside the trapping set", {"cooperative_region"}},
        {"almost every trajectory converges to a stationary point", {"convergence_census"}},
        {"homogeneous market has 2^N-1 stationary points, N of them stable", {"homogeneous_census"}},
        {"field is a gradient exactly when attractiveness is homogeneous", {"gradient_structure"}},
        {"strong friction gives a unique globally attracting point", {"contraction"}},
        {"two sellers: one, two or three stationary points across the fold", {"two_seller_regimes"}},
        {"two clusters: non-monotone regimes exactly when k > N-k and A > 0", {"two_cluster_regimes"}},
    };
    return entries;
}

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names{
        "simplex_decay",      "gronwall_bound",     "monotone_ordering",  "eventual_ordering",
        "trapping",           "cooperative_region", "convergence_census", "homogeneous_census",
        "gradient_structure", "contraction",        "two_seller_regimes", "two_cluster_regimes"};
    return names;
}

bool check_applies(const std::string& name, const SuiteConfig& config) {
    const auto& m = config.market;
    if (name == "homogeneous_census") return m && m->is_homogeneous();
    if (name == "contraction") return m && contraction_certificate(*m);
    if (name == "two_seller_regimes") return m && m->n() == 2 && m->a_min() < m->a_max();
    if (name == "two_cluster_regimes") {
        return config.cluster && !(config.cluster->a_low == config.cluster->a_high && 2 * config.cluster->k == config.cluster->n);
    }
    return m.has_value();
}

std::vector<CheckReport> run_suite(const SuiteConfig& config) {
    const auto& names = check_names();
    for (const auto& n : config.only) {
        if (std::find(names.begin(), names.end(), n) == names.end()) throw InvalidInput("checks: unknown check '" + n + "'");
    }
    std::vector<std::string> selected;
    for (const auto& n : names) {
        const bool named = std::find(config.only.begin(), config.only.end(), n) != config.only.end();
        if (config.only.empty() ? check_applies(n, config) : named) selected.push_back(n);
    }

    const CheckOptions& opts = config.options;
    auto initial = [&](const MarketParams& p) {
        // One start per suite, drawn from a stream no trial uses.
        StreamRng rng(opts.seed, std::uint64_t{1} << 40);
        Vector j(static_cast<Eigen::Index>(p.n()));
        for (Eigen::Index i = 0; i < j.size(); ++i) j(i) = rng.uniform(-2.0, p.a_max() / p.gamma() + 2.0);
        return PreferenceState(std::move(j));
    };

    std::vector<CheckReport> out;
    for (const auto& n : selected) {
        if (!check_applies(n, config)) {
            CheckReport r = start(n, config.market ? market_json(*config.market) : json::object(), opts.seed);
            r.details["error"] = "check does not apply to this configuration";
            r.reproducer = json{{"params", r.params}};
            out.push_back(std::move(r));
            continue;
        }
        const MarketParams* p = config.market ? &*config.market : nullptr;
        if (n == "simplex_decay") out.push_back(check_simplex_decay(*p, initial(*p), opts));
        else if (n == "gronwall_bound") out.push_back(check_gronwall_bound(*p, initial(*p), opts));
        else if (n == "monotone_ordering") out.push_back(check_monotone_ordering(*p, opts));
        else if (n == "eventual_ordering") out.push_back(check_eventual_ordering(*p, opts));
        else if (n == "trapping") out.push_back(check_trapping(*p, opts));
        else if (n == "cooperative_region") out.push_back(check_cooperative_region(*p, opts));
        else if (n == "convergence_census") out.push_back(check_convergence_census(*p, opts));
        else if (n == "homogeneous_census") out.push_back(check_homogeneous_census(*p));
        else if (n == "gradient_structure") out.push_back(check_gradient_structure(*p, opts));
        else if (n == "contraction") out.push_back(check_contraction(*p, opts));
        else if (n == "two_seller_regimes") out.push_back(check_two_seller_regimes(p->a_min(), p->a_max()));
        else if (n == "two_cluster_regimes") out.push_back(check_two_cluster_regimes(*config.cluster));
    }
    return out;
}

}  // namespace wkh

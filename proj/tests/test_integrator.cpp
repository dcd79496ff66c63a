#include "oracles.hpp"
#include "wkh/equilibria.hpp"
#include "wkh/errors.hpp"
#include "wkh/integrator.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace wkh;

namespace {

struct Problem {
    MarketParams p;
    PreferenceState s0;
};

Problem random_problem(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> n_dist(2, 5);
    std::uniform_real_distribution<double> a_dist(0.5, 2.0);
    std::uniform_real_distribution<double> g_dist(0.3, 1.5);
    const int n = n_dist(rng);
    std::vector<double> a(n);
    for (auto& x : a) x = a_dist(rng);
    MarketParams p(g_dist(rng), a);
    std::uniform_real_distribution<double> j_dist(-2.0, p.a_max() / p.gamma() + 2.0);
    Vector j(n);
    for (auto& x : j) x = j_dist(rng);
    return {p, PreferenceState(j)};
}

bool sorted_ascending(const PreferenceState& s) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        if (s[i] > s[i + 1]) return false;
    return true;
}

std::size_t flip_count(const Trajectory& t) {
    return static_cast<std::size_t>(std::count_if(t.events.begin(), t.events.end(), [](const Event& e) {
        return std::holds_alternative<OrderingFlip>(e.kind);
    }));
}

}  // namespace

TEST_CASE("options validation") {
    IntegrationOptions o;
    CHECK_NOTHROW(o.validate());
    o.rel_tol = 1e-14;
    CHECK_THROWS_AS(o.validate(), InvalidInput);
    o = {};
    o.dt_init = -1;
    CHECK_THROWS_AS(o.validate(), InvalidInput);
    o = {};
    o.t_max = 0.0;
    CHECK_THROWS_AS(o.validate(), InvalidInput);
    o = {};
    CHECK(o.resolved_t_max(0.5) == doctest::Approx(400));
    CHECK(o.resolved_record_every(0.5) == doctest::Approx(0.4));
    CHECK_THROWS_AS(integrate(MarketParams(1.0, {1, 2}), {0, 0, 0}), InvalidInput);
}

TEST_CASE("fixed point converges at time zero") {
    MarketParams p(0.4, {1, 1, 1});
    Trajectory t = integrate(p, {5.0 / 6, 5.0 / 6, 5.0 / 6});
    REQUIRE(t.converged());
    CHECK(t.termination == Termination::Converged);
    REQUIRE(!t.events.empty());
    CHECK(std::holds_alternative<Converged>(t.events.back().kind));
    CHECK(t.events.back().time == 0.0);
    CHECK(flip_count(t) == 0);
}

TEST_CASE("two sellers above the contraction threshold") {
    MarketParams p(1.0, {1, 2});
    Trajectory t = integrate(p, {0, 0});
    REQUIRE(t.converged());
    auto ref = oracle::two_seller_newton(1, 2, 1, 0.5);
    CHECK((*t.converged_to)[0] == doctest::Approx(ref.first).epsilon(1e-8));
    CHECK((*t.converged_to)[1] == doctest::Approx(ref.second).epsilon(1e-8));
    CHECK((*t.converged_to)[0] < (*t.converged_to)[1]);
}

TEST_CASE("homogeneous market keeps the initial leader") {
    MarketParams p(2.0 / 7, {1, 1, 1});
    Trajectory t = integrate(p, {0.3, 0.1, 0.1});
    REQUIRE(t.converged());
    const auto& s = *t.converged_to;
    CHECK(s[0] > s[1] + 1.0);
    CHECK(std::abs(s[1] - s[2]) < 1e-9);
    // The limit is one of the stable points of the exact enumeration.
    auto set = solve_homogeneous(p);
    bool found = false;
    for (const auto& pt : set.points)
        if (pt.stability == Stability::Stable && (pt.state.values() - s.values()).cwiseAbs().maxCoeff() < 1e-7) found = true;
    CHECK(found);
}

TEST_CASE("samples sit on the recording grid") {
    MarketParams p(0.5, {1, 2, 3});
    IntegrationOptions o;
    o.t_max = 10.0;
    o.record_every = 0.25;
    o.convergence_tol = 1e-300;
    Trajectory t = integrate(p, {3, 1, 0}, o);
    CHECK(t.termination == Termination::ReachedTMax);
    REQUIRE(t.times.size() == 41);
    for (std::size_t k = 0; k < t.times.size(); ++k) CHECK(t.times[k] == doctest::Approx(0.25 * k).epsilon(1e-14));
    CHECK(t.times.back() == 10.0);
    CHECK(t.states.size() == t.times.size());
    CHECK(t.rates.size() == t.times.size());
    for (std::size_t k = 0; k + 1 < t.events.size(); ++k) CHECK(t.events[k].time <= t.events[k + 1].time);
}

TEST_CASE("simplex residual decays exponentially and the Gronwall envelope holds") {
    std::mt19937_64 rng(21);
    IntegrationOptions o;
    for (int trial = 0; trial < 20; ++trial) {
        Problem pr = random_problem(rng);
        Trajectory t = integrate(pr.p, pr.s0, o);
        const double r0 = simplex_residual(pr.p, pr.s0);
        const double g = pr.p.gamma();
        for (std::size_t k = 0; k < t.times.size(); ++k) {
            const double r = simplex_residual(pr.p, t.states[k]);
            CHECK(std::abs(r - r0 * std::exp(-g * t.times[k])) <= 100 * o.abs_tol);
            for (std::size_t i = 0; i < pr.p.n(); ++i) {
                const double j = t.states[k][i];
                const double env = pr.s0[i] * std::exp(-g * t.times[k]);
                const double bound = pr.p.a()(i) / g * (1 - std::exp(-g * t.times[k]));
                CHECK(j >= env - 10 * o.abs_tol);
                CHECK(j <= env + bound + 10 * o.abs_tol);
            }
        }
    }
}

TEST_CASE("adaptive and fixed-step schemes agree") {
    std::mt19937_64 rng(22);
    IntegrationOptions adaptive;
    IntegrationOptions fixed;
    fixed.scheme = Scheme::FixedStepRK4;
    fixed.dt_init = 1e-2;
    for (int trial = 0; trial < 20; ++trial) {
        Problem pr = random_problem(rng);
        Trajectory ta = integrate(pr.p, pr.s0, adaptive);
        Trajectory tf = integrate(pr.p, pr.s0, fixed);
        REQUIRE(ta.converged());
        REQUIRE(tf.converged());
        const double diff = (ta.converged_to->values() - tf.converged_to->values()).cwiseAbs().maxCoeff();
        CHECK(diff <= 10 * (adaptive.rel_tol + adaptive.abs_tol));
    }
}

TEST_CASE("concordantly sorted starts never flip") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        Problem pr = random_problem(rng);
        Vector j = pr.s0.values();
        std::sort(j.begin(), j.end());
        Trajectory t = integrate(pr.p, PreferenceState(j));
        CHECK(flip_count(t) == 0);
        CHECK(detect_ordering_events(t).empty());
        for (const auto& s : t.states) CHECK(sorted_ascending(s));
    }
}

TEST_CASE("reverse-sorted starts settle in the first half") {
    MarketParams p(0.4, {1, 1.5, 2, 3});
    Trajectory t = integrate(p, {4, 3, 2, 1});
    const double horizon = t.times.back();
    auto events = detect_ordering_events(t);
    CHECK(!events.empty());
    for (const auto& e : events) CHECK(e.time < 0.5 * horizon);
    for (const auto& e : t.events)
        if (std::holds_alternative<OrderingFlip>(e.kind)) CHECK(e.time < 0.5 * horizon);
    // The ordering after the last event is constant.
    const double last = events.back().time;
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < t.times.size(); ++k) {
        if (t.times[k] <= last) continue;
        std::vector<std::size_t> idx(p.n());
        for (std::size_t i = 0; i < p.n(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return t.states[k][a] < t.states[k][b]; });
        if (order.empty()) order = idx;
        CHECK(idx == order);
    }
}

TEST_CASE("two sellers started on the equilibrium") {
    MarketParams p(1.0, {1, 2});
    auto ref = oracle::two_seller_newton(1, 2, 1, 0.5);
    Trajectory t = integrate(p, {ref.first, ref.second});
    CHECK(detect_ordering_events(t).empty());
    CHECK(flip_count(t) == 0);
}

TEST_CASE("flip times match a finely sampled crossing") {
    MarketParams p(1.0, {1, 2});
    IntegrationOptions o;
    o.t_max = 5.0;
    o.record_every = 0.5;
    Trajectory coarse = integrate(p, {1, 0}, o);
    auto events = detect_ordering_events(coarse);
    REQUIRE(events.size() == 1);

    IntegrationOptions fine = o;
    fine.record_every = 1e-4;
    Trajectory dense = integrate(p, {1, 0}, fine);
    double crossing = -1;
    for (std::size_t k = 0; k + 1 < dense.times.size(); ++k) {
        const double d0 = dense.states[k][0] - dense.states[k][1];
        const double d1 = dense.states[k + 1][0] - dense.states[k + 1][1];
        if (d0 > 0 && d1 <= 0) {
            crossing = dense.times[k] + (dense.times[k + 1] - dense.times[k]) * d0 / (d0 - d1);
            break;
        }
    }
    REQUIRE(crossing > 0);
    CHECK(events[0].time == doctest::Approx(crossing).epsilon(1e-4));
    REQUIRE(flip_count(coarse) == 1);
    for (const auto& e : coarse.events)
        if (std::holds_alternative<OrderingFlip>(e.kind)) CHECK(e.time == doctest::Approx(crossing).epsilon(1e-4));
}

TEST_CASE("trapping set holds after the last flip") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 20; ++trial) {
        Problem pr = random_problem(rng);
        Trajectory t = integrate(pr.p, pr.s0);
        REQUIRE(t.converged());
        const auto& lim = *t.converged_to;
        std::size_t top = 0;
        for (std::size_t i = 1; i < lim.size(); ++i)
            if (lim[i] > lim[top]) top = i;
        double last_flip = 0.0;
        for (const auto& e : t.events)
            if (std::holds_alternative<OrderingFlip>(e.kind)) last_flip = e.time;
        const double burn_in = std::max(last_flip, 0.5 * t.times.back());
        for (std::size_t k = 0; k < t.times.size(); ++k)
            if (t.times[k] >= burn_in) CHECK(in_trapping_set(pr.p, t.states[k], top, 1e-6));
        CHECK(in_trapping_set(pr.p, lim, top, 1e-6));
    }
}

TEST_CASE("hermite interpolant reproduces the endpoints") {
    MarketParams p(0.5, {1, 2, 3});
    Trajectory t = integrate(p, {3, 1, 0});
    Vector h0 = hermite(t, 0, t.times[0]);
    Vector h1 = hermite(t, 0, t.times[1]);
    CHECK((h0 - t.states[0].values()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((h1 - t.states[1].values()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(hermite(t, t.times.size() - 1, 0.0), InvalidInput);
}

TEST_CASE("blow-up is reported as a stiffness failure") {
    MarketParams p(1.0, {1, 2});
    FieldFn blowup = [](const Vector& j, Vector& out) { out = j.array().square(); };
    IntegrationOptions o;
    o.t_max = 10.0;
    CHECK_THROWS_AS(integrate_field(p, blowup, {1, 1}, o), StiffnessError);
}

TEST_CASE("basin sampling") {
    SUBCASE("contraction gives one limit") {
        MarketParams p(1.6, {1, 2, 3});
        BasinBox box{PreferenceState({-5, -5, -5}), PreferenceState({5, 5, 5})};
        auto samples = basin_sample(p, box, 30, 7, {}, 4);
        REQUIRE(samples.size() == 30);
        for (const auto& s : samples) {
            REQUIRE(s.limit.has_value());
            CHECK((s.limit->values() - samples[0].limit->values()).cwiseAbs().maxCoeff() < 1e-6);
        }
        CHECK(sorted_ascending(*samples[0].limit));
    }
    SUBCASE("homogeneous limits are the stable points") {
        MarketParams p(2.0 / 7, {1, 1, 1});
        const double hi = 1.0 / p.gamma();
        BasinBox box{PreferenceState({0, 0, 0}), PreferenceState({hi, hi, hi})};
        auto samples = basin_sample(p, box, 200, 3, {}, 4);
        auto set = solve_homogeneous(p);
        std::vector<int> hits(set.points.size(), 0);
        for (const auto& s : samples) {
            REQUIRE(s.limit.has_value());
            bool matched = false;
            for (std::size_t i = 0; i < set.points.size(); ++i) {
                if ((set.points[i].state.values() - s.limit->values()).cwiseAbs().maxCoeff() < 1e-6) {
                    CHECK(set.points[i].stability == Stability::Stable);
                    ++hits[i];
                    matched = true;
                }
            }
            CHECK(matched);
        }
        CHECK(std::count_if(hits.begin(), hits.end(), [](int h) { return h > 0; }) <= 3);
    }
    SUBCASE("a stationary start stays put") {
        MarketParams p(0.4, {1, 1, 1});
        PreferenceState fp({5.0 / 6, 5.0 / 6, 5.0 / 6});
        auto samples = basin_sample(p, {fp, fp}, 1, 0);
        REQUIRE(samples[0].limit.has_value());
        CHECK((samples[0].limit->values() - fp.values()).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("deterministic across runs and thread counts") {
        MarketParams p(0.3, {1, 1.2, 2});
        BasinBox box{PreferenceState({0, 0, 0}), PreferenceState({6, 6, 6})};
        auto a = basin_sample(p, box, 16, 99, {}, 1);
        auto b = basin_sample(p, box, 16, 99, {}, 4);
        auto c = basin_sample(p, box, 16, 100, {}, 1);
        bool any_diff = false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK((a[i].start.values().array() == b[i].start.values().array()).all());
            CHECK((a[i].limit->values().array() == b[i].limit->values().array()).all());
            if ((a[i].start.values().array() != c[i].start.values().array()).any()) any_diff = true;
        }
        CHECK(any_diff);
    }
    SUBCASE("bad inputs") {
        MarketParams p(1.0, {1, 2});
        BasinBox box{PreferenceState({0, 0}), PreferenceState({1, 1})};
        CHECK_THROWS_AS(basin_sample(p, box, 0, 0), InvalidInput);
        BasinBox inverted{PreferenceState({1, 1}), PreferenceState({0, 0})};
        CHECK_THROWS_AS(basin_sample(p, inverted, 1, 0), InvalidInput);
    }
}

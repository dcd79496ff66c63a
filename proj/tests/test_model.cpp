#include "oracles.hpp"
#include "wkh/errors.hpp"
#include "wkh/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wkh;

namespace {

Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = u(rng);
    return v;
}

std::vector<double> random_a(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.2, 4.0);
    std::vector<double> a(n);
    for (auto& x : a) x = u(rng);
    return a;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("market params validate and sort") {
    CHECK_THROWS_AS(MarketParams(0.0, {1, 2}), InvalidInput);
    CHECK_THROWS_AS(MarketParams(-1.0, {1, 2}), InvalidInput);
    CHECK_THROWS_AS(MarketParams(1.0, {1}), InvalidInput);
    CHECK_THROWS_AS(MarketParams(1.0, {1, -2}), InvalidInput);
    CHECK_THROWS_AS(MarketParams(1.0, {1, std::nan("")}), InvalidInput);

    MarketParams p(1.0, {3, 1, 2});
    CHECK(p.a()(0) == 1);
    CHECK(p.a()(2) == 3);
    CHECK(p.permutation() == std::vector<std::size_t>{1, 2, 0});
    Vector sorted(3);
    sorted << 10, 20, 30;
    Vector orig = p.to_original_order(sorted);
    CHECK(orig(0) == 30);
    CHECK(orig(1) == 10);
    CHECK(orig(2) == 20);
    CHECK(p.with_gamma(0.5).gamma() == 0.5);
    CHECK(p.with_gamma(0.5).permutation() == p.permutation());
}

TEST_CASE("ties keep their input order") {
    MarketParams p(1.0, {2, 1, 2, 1});
    CHECK(p.permutation() == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("preference state rejects non-finite entries") {
    CHECK_THROWS_AS(PreferenceState({0.0, INFINITY}), InvalidInput);
    CHECK_THROWS_AS(PreferenceState({std::nan(""), 1.0}), InvalidInput);
}

TEST_CASE("vector field examples") {
    MarketParams h(0.4, {1, 1, 1});
    Vector f = vector_field(h, {5.0 / 6, 5.0 / 6, 5.0 / 6});
    CHECK(sup_norm(f) < 1e-15);

    MarketParams p(1.0, {1, 2});
    Vector g = vector_field(p, {0, 0});
    CHECK(g(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g(1) == doctest::Approx(1.0).epsilon(1e-15));

    // Large preferences stay finite.
    Vector big = vector_field(p, {700, 710});
    CHECK(std::isfinite(big(0)));
    CHECK(std::isfinite(big(1)));
    CHECK(big(1) == doctest::Approx(-710 + 2 / (1 + std::exp(-10.0))).epsilon(1e-14));
}

TEST_CASE("vector field matches the direct formula") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 5;
        auto a = random_a(rng, n);
        MarketParams p(0.1 + 0.01 * trial, a);
        Vector j = random_vector(rng, n, -5, 5);
        auto ref = oracle::field(p.gamma(), to_std(p.a()), to_std(j));
        Vector f = vector_field(p, PreferenceState(j));
        for (std::size_t i = 0; i < n; ++i) CHECK(f(i) == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("softmax is positive and normalized") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
        Vector x = random_vector(rng, 2 + trial % 8, -300, 300);
        Vector q = softmax(x);
        CHECK(std::abs(q.sum() - 1.0) < 1e-14);
        CHECK((q.array() >= 0).all());
    }
    Vector x(3);
    x << 0, 0, 0;
    CHECK(log_sum_exp(x) == doctest::Approx(std::log(3.0)));
    x << 1000, 1000, 1000;
    CHECK(log_sum_exp(x) == doctest::Approx(1000 + std::log(3.0)));
}

TEST_CASE("jacobian example and finite differences") {
    MarketParams h(1.0, {1, 1});
    Matrix jac = jacobian(h, {0, 0});
    CHECK(jac(0, 0) == doctest::Approx(-0.75));
    CHECK(jac(0, 1) == doctest::Approx(-0.25));

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 6;
        MarketParams p(0.05 + 0.02 * trial, random_a(rng, n));
        Vector j = random_vector(rng, n, -3, 3);
        Matrix jac2 = jacobian(p, PreferenceState(j));
        const double h_step = 1e-6;
        for (std::size_t c = 0; c < n; ++c) {
            Vector jp = j, jm = j;
            jp(c) += h_step;
            jm(c) -= h_step;
            auto fp = oracle::field(p.gamma(), to_std(p.a()), to_std(jp));
            auto fm = oracle::field(p.gamma(), to_std(p.a()), to_std(jm));
            for (std::size_t r = 0; r < n; ++r) {
                const double fd = (fp[r] - fm[r]) / (2 * h_step);
                CHECK(std::abs(fd - jac2(r, c)) / std::max(1.0, std::abs(fd)) < 1e-6);
            }
        }
    }
}

TEST_CASE("jacobian sign structure") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 6;
        MarketParams p(0.5, random_a(rng, n));
        Vector j = random_vector(rng, n, -4, 4);
        Matrix jac = jacobian(p, PreferenceState(j));
        for (std::size_t r = 0; r < n; ++r) {
            CHECK(jac(r, r) <= -p.gamma() + p.a()(r) / 4 + 1e-15);
            for (std::size_t c = 0; c < n; ++c)
                if (r != c) CHECK(jac(r, c) < 0);
        }
    }
}

TEST_CASE("jacobian symmetric only for homogeneous markets") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 5;
        Vector j = random_vector(rng, n, -2, 2);
        MarketParams h(0.7, std::vector<double>(n, 1.3));
        Matrix jh = jacobian(h, PreferenceState(j));
        CHECK((jh - jh.transpose()).cwiseAbs().maxCoeff() == 0.0);

        auto a = random_a(rng, n);
        a[0] = a[1] + 0.5;
        MarketParams p(0.7, a);
        Matrix jp = jacobian(p, PreferenceState(j));
        CHECK((jp - jp.transpose()).cwiseAbs().maxCoeff() > 0.0);
    }
}

TEST_CASE("delta field examples") {
    MarketParams p(1.0, {1, 2});
    Vector d(1);
    d << 0;
    Vector g = delta_field(p, DeltaState(1, d));
    CHECK(g(0) == doctest::Approx(-0.5));
    Vector g0 = delta_field(p, DeltaState(0, d));
    CHECK(g0(0) == doctest::Approx(0.5));
}

TEST_CASE("delta field agrees with vector field differences") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + trial % 6;
        MarketParams p(0.05 + 0.001 * trial, random_a(rng, n));
        PreferenceState s(random_vector(rng, n, -5, 5));
        const std::size_t base = trial % n;
        Vector f = vector_field(p, s);
        DeltaState d = to_delta(s, base);
        Vector g = delta_field(p, d);
        for (std::size_t slot = 0; slot + 1 < n; ++slot) {
            const std::size_t k = d.seller(slot);
            const double ref = f(k) - f(base);
            CHECK(std::abs(g(slot) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
        }
    }
}

TEST_CASE("lifting differences lands on the simplex") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 5;
        MarketParams p(0.3, random_a(rng, n));
        PreferenceState s(random_vector(rng, n, -3, 3));
        DeltaState d = to_delta(s, n - 1);
        PreferenceState lifted = lift_to_simplex(p, d);
        CHECK(std::abs(simplex_residual(p, lifted)) < 1e-12);
        DeltaState back = to_delta(lifted, n - 1);
        CHECK((back.deltas() - d.deltas()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("simplex residual examples") {
    CHECK(std::abs(simplex_residual(MarketParams(0.4, {1, 1, 1}), {5.0 / 6, 5.0 / 6, 5.0 / 6})) < 1e-15);
    CHECK(simplex_residual(MarketParams(1.0, {1, 2}), {1, 1}) == doctest::Approx(0.5));
}

TEST_CASE("potential examples and gradient") {
    CHECK(potential(MarketParams(1.0, {1, 1}), {0, 0}) == doctest::Approx(-std::log(2.0)));
    CHECK_THROWS_AS(potential(MarketParams(1.0, {1, 2}), {0, 0}), UnsupportedCase);
    CHECK(std::isfinite(potential(MarketParams(1.0, {1, 1}), {800, 790})));

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 6;
        MarketParams p(0.1 + 0.01 * trial, std::vector<double>(n, 0.5 + 0.02 * trial));
        Vector j = random_vector(rng, n, -3, 3);
        Vector f = vector_field(p, PreferenceState(j));
        for (std::size_t i = 0; i < n; ++i) {
            const double h = 1e-5;
            Vector jp = j, jm = j;
            jp(i) += h;
            jm(i) -= h;
            const double grad = (potential(p, PreferenceState(jp)) - potential(p, PreferenceState(jm))) / (2 * h);
            CHECK(std::abs(-grad - f(i)) / std::max(1.0, std::abs(f(i))) < 1e-6);
        }
    }
}

TEST_CASE("trapping set membership") {
    MarketParams h(1.0, {1, 1, 1});
    CHECK(in_trapping_set(h, {0.1, 0.5, 0.3}, 1, 0.0));
    CHECK_FALSE(in_trapping_set(h, {0.1, 0.5, 0.3}, 2, 0.0));

    MarketParams p(1.0, {1, 2});
    CHECK_FALSE(in_trapping_set(p, {0.8, 0.1}, 1, 0.0));
    CHECK(in_trapping_set(p, {0.6, 0.1}, 1, 0.0));
    CHECK_THROWS_AS(in_trapping_set(p, {0.6, 0.1}, 2, 0.0), InvalidInput);

    Vector d(1);
    d << 0.5;
    CHECK(in_trapping_set(p, DeltaState(1, d), 0.0));
    d << 0.7;
    CHECK_FALSE(in_trapping_set(p, DeltaState(1, d), 0.0));
}

TEST_CASE("sector labels") {
    Vector d(2);
    d << -1, -0.5;
    CHECK(sector_of(DeltaState(2, d)).all_negative());
    d << -1, 0.0;
    CHECK(sector_of(DeltaState(2, d)).all_negative());
    d << 0.3, 0.7;
    CHECK(sector_of(DeltaState(2, d)).max_positive_at == std::optional<std::size_t>(1));
    d << 0.9, -0.7;
    CHECK(sector_of(DeltaState(2, d)).max_positive_at == std::optional<std::size_t>(0));
}

TEST_CASE("cooperativity inside the trapping region") {
    // Off-diagonal partials of the difference field are nonnegative when every
    // difference sits below its log-ratio bound.
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + trial % 4;
        MarketParams p(0.2 + 0.01 * trial, random_a(rng, n));
        const std::size_t base = trial % n;
        Vector d(static_cast<Eigen::Index>(n - 1));
        DeltaState shape(base, Vector::Zero(static_cast<Eigen::Index>(n - 1)));
        for (std::size_t slot = 0; slot + 1 < n; ++slot) {
            const std::size_t i = shape.seller(slot);
            d(slot) = std::log(p.a()(base) / p.a()(i)) - u(rng);
        }
        const double h = 1e-6;
        for (std::size_t l = 0; l + 1 < n; ++l) {
            Vector dp = d, dm = d;
            dp(l) += h;
            dm(l) -= h;
            Vector gp = delta_field(p, DeltaState(base, dp));
            Vector gm = delta_field(p, DeltaState(base, dm));
            for (std::size_t i = 0; i + 1 < n; ++i)
                if (i != l) CHECK((gp(i) - gm(i)) / (2 * h) >= -1e-8);
        }
    }
}

#include "wkh/reduced_field.hpp"

#include "wkh/errors.hpp"

#include <algorithm>
#include <cmath>

namespace wkh {

void ClusterSpec::validate() const {
    if (n < 2) throw InvalidInput("cluster.n: at least two sellers are required");
    if (k < 1 || k > n - 1) throw InvalidInput("cluster.k: must satisfy 1 <= k <= n-1");
    if (!(std::isfinite(a_low) && a_low > 0.0)) throw InvalidInput("cluster.a_low: must be positive and finite");
    if (!(std::isfinite(a_high) && a_high > 0.0)) throw InvalidInput("cluster.a_high: must be positive and finite");
    if (a_low > a_high) throw InvalidInput("cluster.a_low: must not exceed a_high");
}

MarketParams ClusterSpec::params(double gamma) const {
    validate();
    std::vector<double> a(n, a_high);
    std::fill_n(a.begin(), k, a_low);
    return MarketParams(gamma, std::move(a));
}

ClusterField::ClusterField(const ClusterSpec& spec, double gamma) : spec_(spec), gamma_(gamma) {
    spec_.validate();
    if (!(std::isfinite(gamma) && gamma > 0.0)) throw InvalidInput("gamma: must be a positive finite number");
}

double ClusterField::value(double delta) const {
    const double k = static_cast<double>(spec_.k);
    const double m = static_cast<double>(spec_.n - spec_.k);
    double frac;
    if (delta <= 0.0) {
        const double e = std::exp(delta);
        frac = (spec_.a_low * e - spec_.a_high) / (m + k * e);
    } else {
        const double e = std::exp(-delta);
        frac = (spec_.a_low - spec_.a_high * e) / (m * e + k);
    }
    return -gamma_ * delta + frac;
}

double ClusterField::derivative(double delta) const {
    const double k = static_cast<double>(spec_.k);
    const double m = static_cast<double>(spec_.n - spec_.k);
    const double c = m * spec_.a_low + k * spec_.a_high;
    double bump;
    if (delta <= 0.0) {
        const double e = std::exp(delta);
        bump = c * e / ((m + k * e) * (m + k * e));
    } else {
        const double e = std::exp(-delta);
        bump = c * e / ((m * e + k) * (m * e + k));
    }
    return -gamma_ + bump;
}

double ClusterField::gamma_end() const noexcept {
    const double k = static_cast<double>(spec_.k);
    const double m = static_cast<double>(spec_.n - spec_.k);
    return spec_.a_low / (4.0 * k) + spec_.a_high / (4.0 * m);
}

double ClusterField::gamma_split() const noexcept {
    const double k = static_cast<double>(spec_.k);
    const double m = static_cast<double>(spec_.n - spec_.k);
    const double n = static_cast<double>(spec_.n);
    return (m * spec_.a_low + k * spec_.a_high) / (n * n);
}

double ClusterField::log_ratio() const noexcept {
    return std::log(static_cast<double>(spec_.n - spec_.k) / static_cast<double>(spec_.k));
}

std::optional<std::pair<double, double>> ClusterField::critical_points() const {
    if (gamma_ > gamma_end()) return std::nullopt;
    const double k = static_cast<double>(spec_.k);
    const double m = static_cast<double>(spec_.n - spec_.k);
    const double b = (m * spec_.a_low + k * spec_.a_high) / (k * m * gamma_);
    // Roots of x^2 - (b - 2) x + 1 in the rescaled variable; their product is 1.
    const double half_gap = std::log(0.5 * b - 1.0 + std::sqrt(std::max(0.0, b * (0.25 * b - 1.0))));
    const double centre = log_ratio();
    return std::make_pair(centre - half_gap, centre + half_gap);
}

double ClusterField::tangency_tol() const noexcept { return 1e-12 * std::max(1.0, spec_.a_high); }

std::vector<ClusterField::Root> ClusterField::roots() const {
    const double k = static_cast<double>(spec_.k);
    const double m = static_cast<double>(spec_.n - spec_.k);
    // The rational term lies in (-a_high/m, a_low/k), which bounds every root.
    const double far_lo = -spec_.a_high / (m * gamma_) - 1.0;
    const double far_hi = spec_.a_low / (k * gamma_) + 1.0;
    const double tol = tangency_tol();

    std::vector<Root> out;
    auto solve_on = [&](double lo, double hi) {
        auto g = [this](double x) { return value(x); };
        double x = detail::bisect(g, lo, hi, 1e-13);
        const double slope = derivative(x);
        if (slope != 0.0) {
            const double polished = x - value(x) / slope;
            if (polished >= lo && polished <= hi && std::abs(value(polished)) < std::abs(value(x))) x = polished;
        }
        out.push_back(Root{x, derivative(x), false});
    };
    auto tangent_at = [&](double x) { out.push_back(Root{x, derivative(x), true}); };

    const auto crit = critical_points();
    if (!crit || crit->first == crit->second) {
        // G is monotone decreasing (a degenerate critical point is a triple root or none).
        if (crit && std::abs(value(crit->first)) <= tol) {
            tangent_at(crit->first);
        } else {
            solve_on(far_lo, far_hi);
        }
        return out;
    }

    const auto [dm, dp] = *crit;
    const double gm = value(dm);
    const double gp = value(dp);
    // Decreasing on (-inf, dm], increasing on [dm, dp], decreasing on [dp, inf).
    if (gm < -tol) {
        solve_on(far_lo, dm);
    } else if (gm <= tol) {
        tangent_at(dm);
    }
    if (gm < -tol && gp > tol) solve_on(dm, dp);
    if (gp > tol) {
        solve_on(dp, far_hi);
    } else if (gp >= -tol && gm < -tol) {
        tangent_at(dp);
    }
    if (gm > tol && gp <= tol) throw Error("reduced field: critical values out of order");
    std::sort(out.begin(), out.end(), [](const Root& l, const Root& r) { return l.delta < r.delta; });
    return out;
}

PreferenceState ClusterField::lift(double delta) const {
    const double k = static_cast<double>(spec_.k);
    const double m = static_cast<double>(spec_.n - spec_.k);
    const double high = (1.0 / gamma_ - k * delta / spec_.a_low) / (k / spec_.a_low + m / spec_.a_high);
    Vector j(static_cast<Eigen::Index>(spec_.n));
    j.head(static_cast<Eigen::Index>(spec_.k)).setConstant(high + delta);
    j.tail(static_cast<Eigen::Index>(spec_.n - spec_.k)).setConstant(high);
    return PreferenceState(std::move(j));
}

}  // namespace wkh

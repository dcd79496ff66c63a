#pragma once

// Independent reference implementations used only by the tests. They follow
// the textbook formulas directly and share no code with the library.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

// Vector field written out term by term, without max-subtraction.
inline std::vector<double> field(double gamma, const std::vector<double>& a, const std::vector<double>& j) {
    double z = 0.0;
    for (double v : j) z += std::exp(v);
    std::vector<double> f(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) f[i] = -gamma * j[i] + a[i] * std::exp(j[i]) / z;
    return f;
}

// Reduced scalar field of the two-group configuration.
inline double cluster_g(double n, double k, double a_low, double a_high, double gamma, double d) {
    return -gamma * d + (a_low * std::exp(d) - a_high) / (n - k + k * std::exp(d));
}

// Plain bisection on a sign change; 200 halvings.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Critical points of the reduced field from the quadratic in x = e^d:
// gamma k^2 x^2 + (2 gamma k m - c) x + gamma m^2 = 0, c = m a_low + k a_high.
inline bool critical_points(double n, double k, double a_low, double a_high, double gamma, double& lo, double& hi) {
    const double m = n - k;
    const double c = m * a_low + k * a_high;
    const double qa = gamma * k * k;
    const double qb = 2 * gamma * k * m - c;
    const double qc = gamma * m * m;
    const double disc = qb * qb - 4 * qa * qc;
    if (disc < 0) return false;
    const double r1 = (-qb - std::sqrt(disc)) / (2 * qa);
    const double r2 = (-qb + std::sqrt(disc)) / (2 * qa);
    lo = std::log(r1);
    hi = std::log(r2);
    return true;
}

// Critical value at the upper (or lower) critical point.
inline double critical_value(double n, double k, double a_low, double a_high, double gamma, bool upper) {
    double lo = 0, hi = 0;
    critical_points(n, k, a_low, a_high, gamma, lo, hi);
    return cluster_g(n, k, a_low, a_high, gamma, upper ? hi : lo);
}

// Zeros of f on [lo, hi] by a dense sign scan, each refined by bisection.
inline std::vector<double> scan_zeros(const std::function<double(double)>& f, double lo, double hi, int cells) {
    std::vector<double> out;
    double x0 = lo;
    double f0 = f(lo);
    for (int i = 1; i <= cells; ++i) {
        const double x1 = lo + (hi - lo) * i / cells;
        const double f1 = f(x1);
        if ((f0 > 0) != (f1 > 0)) out.push_back(bisect(f, x0, x1));
        x0 = x1;
        f0 = f1;
    }
    return out;
}

// Scalar Newton for the two-seller equilibrium, with J_2 eliminated on the simplex.
inline std::pair<double, double> two_seller_newton(double a1, double a2, double gamma, double j1) {
    auto j2_of = [&](double x) { return a2 * (1.0 / gamma - x / a1); };
    auto f = [&](double x) { return -gamma * x + a1 / (1.0 + std::exp(j2_of(x) - x)); };
    for (int i = 0; i < 100; ++i) {
        const double h = 1e-7;
        const double d = (f(j1 + h) - f(j1 - h)) / (2 * h);
        const double step = f(j1) / d;
        j1 -= step;
        if (std::abs(step) < 1e-15) break;
    }
    return {j1, j2_of(j1)};
}

}  // namespace oracle

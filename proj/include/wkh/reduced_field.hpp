#pragma once

// Scalar dynamics on the two-cluster subspace
//   J_1 = ... = J_k,  J_{k+1} = ... = J_n,  J on the simplex,
// in the coordinate delta = J_1 - J_n:
//
//   G(delta) = -gamma * delta + (a_low e^delta - a_high) / (n - k + k e^delta)
//
// Two sellers are the case n = 2, k = 1. A homogeneous market with a group of
// k coordinates split off is the case a_low == a_high.

#include "wkh/model.hpp"

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace wkh {

struct ClusterSpec {
    std::size_t n = 2;
    std::size_t k = 1;  // size of the low-attractiveness cluster
    double a_low = 1.0;
    double a_high = 1.0;

    // Throws InvalidInput unless n >= 2, 1 <= k <= n-1 and 0 < a_low <= a_high.
    void validate() const;
    MarketParams params(double gamma) const;
};

class ClusterField {
public:
    ClusterField(const ClusterSpec& spec, double gamma);

    double value(double delta) const;
    double derivative(double delta) const;

    const ClusterSpec& spec() const noexcept { return spec_; }
    double gamma() const noexcept { return gamma_; }

    // Peak of the positive part of G': below it G has two critical points.
    double gamma_end() const noexcept;
    // Where the critical point that changes sign crosses zero.
    double gamma_split() const noexcept;
    // log((n - k) / k), the centre of the critical points.
    double log_ratio() const noexcept;

    // (delta_minus, delta_plus) when gamma <= gamma_end.
    std::optional<std::pair<double, double>> critical_points() const;

    struct Root {
        double delta;
        double slope;  // G'(delta)
        bool tangent;  // root sits on a critical point (double root)
    };
    // All zeros of G, ascending. Bisection on monotone pieces, then one Newton
    // step. A critical value within `tangency_tol()` of zero is a double root.
    std::vector<Root> roots() const;
    double tangency_tol() const noexcept;

    // Full N-dimensional cluster configuration on the simplex.
    PreferenceState lift(double delta) const;

private:
    ClusterSpec spec_;
    double gamma_;
};

namespace detail {

// Bisection on a sign change of f over [lo, hi]. Stops when the bracket is
// narrower than `width` or cannot shrink further.
template <class F>
double bisect(F&& f, double lo, double hi, double width) {
    const bool lo_positive = f(lo) > 0.0;
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if ((f(mid) > 0.0) == lo_positive) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

}  // namespace wkh

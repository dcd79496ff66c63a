#include "wkh/bifurcation.hpp"

#include "wkh/errors.hpp"
#include "wkh/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace wkh {

namespace {

// Critical value of G at delta_+ (upper = true) or delta_- for gamma <= gamma_end.
double critical_value(const ClusterSpec& c, double gamma, bool upper) {
    const ClusterField f(c, gamma);
    const auto crit = f.critical_points();
    if (!crit) throw Error("critical value requested above gamma_end");
    return f.value(upper ? crit->second : crit->first);
}

// Bisection to machine precision on a change of the predicate.
template <class Pred>
double bisect_predicate(Pred&& pred, double lo, double hi) {
    const bool at_lo = pred(lo);
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (pred(mid) == at_lo) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Family {
    RegimeTag regime;
    std::size_t n = 0;
    double a_hom = 0.0;
    ClusterSpec cluster;

    std::size_t count(double gamma) const {
        if (regime == RegimeTag::Homogeneous) return homogeneous_point_count(n, a_hom, gamma);
        return ClusterField(cluster, gamma).roots().size();
    }

    // Smallest gap between neighbouring roots of the scalar field.
    double min_gap(double gamma) const {
        if (regime == RegimeTag::Homogeneous) {
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t k = 1; k < n; ++k) {
                const auto r = ClusterField(ClusterSpec{n, k, a_hom, a_hom}, gamma).roots();
                for (std::size_t i = 1; i < r.size(); ++i) gap = std::min(gap, r[i].delta - r[i - 1].delta);
            }
            return gap;
        }
        const auto r = ClusterField(cluster, gamma).roots();
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < r.size(); ++i) gap = std::min(gap, r[i].delta - r[i - 1].delta);
        return gap;
    }

    std::vector<std::pair<double, Stability>> solve(double gamma) const {
        std::vector<std::pair<double, Stability>> out;
        if (regime == RegimeTag::Homogeneous) {
            const auto set = solve_homogeneous(MarketParams(gamma, std::vector<double>(n, a_hom)));
            for (const auto& pt : set.points) out.emplace_back(pt.state[0] - pt.state[n - 1], pt.stability);
        } else {
            const auto pts = regime == RegimeTag::TwoSeller
                                 ? solve_two_seller(MarketParams(gamma, {cluster.a_low, cluster.a_high}))
                                 : solve_two_cluster(cluster, gamma);
            for (const auto& pt : pts) {
                out.emplace_back(pt.state[0] - pt.state[pt.state.size() - 1],
                                 pt.reduced_stability.value_or(pt.stability));
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
        return out;
    }
};

Family make_family(const SweepFamily& f) {
    Family out;
    out.regime = f.regime;
    switch (f.regime) {
        case RegimeTag::Homogeneous: {
            const MarketParams p(1.0, f.a);
            if (!p.is_homogeneous()) throw InvalidInput("a: homogeneous sweep requires equal attractiveness");
            out.n = p.n();
            out.a_hom = p.a_max();
            break;
        }
        case RegimeTag::TwoSeller: {
            const MarketParams p(1.0, f.a);
            if (p.n() != 2) throw InvalidInput("a: two-seller sweep requires exactly two sellers");
            out.cluster = ClusterSpec{2, 1, p.a_min(), p.a_max()};
            break;
        }
        case RegimeTag::TwoCluster:
            if (!f.cluster) throw InvalidInput("cluster: two-cluster sweep requires a cluster specification");
            f.cluster->validate();
            out.cluster = *f.cluster;
            break;
    }
    return out;
}

// Count changes inside [lo, hi], subdividing where roots crowd together.
void scan_interval(const Family& fam, double lo, std::size_t c_lo, double hi, std::size_t c_hi, int depth,
                   std::vector<double>& changes) {
    const bool crowded = fam.min_gap(lo) < 1e-6 || fam.min_gap(hi) < 1e-6;
    if (depth > 0 && crowded) {
        constexpr int parts = 8;
        double prev = lo;
        std::size_t c_prev = c_lo;
        for (int i = 1; i <= parts; ++i) {
            const double next = i == parts ? hi : lo + (hi - lo) * i / parts;
            const std::size_t c_next = i == parts ? c_hi : fam.count(next);
            scan_interval(fam, prev, c_prev, next, c_next, depth - 1, changes);
            prev = next;
            c_prev = c_next;
        }
        return;
    }
    if (c_lo == c_hi) return;
    changes.push_back(bisect_predicate([&](double g) { return fam.count(g) == c_lo; }, lo, hi));
}

}  // namespace

const char* to_string(ThresholdKind k) noexcept {
    return k == ThresholdKind::SaddleNode ? "saddle_node" : "symmetry_breaking";
}

const char* to_string(RegimeTag t) noexcept {
    switch (t) {
        case RegimeTag::Homogeneous: return "homogeneous";
        case RegimeTag::TwoSeller: return "two_seller";
        case RegimeTag::TwoCluster: return "two_cluster";
    }
    return "two_seller";
}

double critical_gamma_two_seller(double a1, double a2) {
    if (!(std::isfinite(a1) && std::isfinite(a2) && a1 > 0.0 && a2 > 0.0)) {
        throw InvalidInput("a: attractiveness must be positive and finite");
    }
    if (!(a1 < a2)) throw PreconditionError("critical_gamma_two_seller: requires a1 < a2");
    const ClusterSpec c{2, 1, a1, a2};
    const double hi = ClusterField(c, 1.0).gamma_end();
    double lo = hi * 1e-9;
    while (critical_value(c, lo, true) <= 0.0) lo *= 1e-3;
    return bisect_predicate([&](double g) { return critical_value(c, g, true) > 0.0; }, lo, hi);
}

double cluster_A(const ClusterSpec& c) {
    c.validate();
    const double k = static_cast<double>(c.k);
    const double m = static_cast<double>(c.n - c.k);
    const double l = std::log(m / k);
    return m * c.a_low * (1.0 - 0.5 * l) - k * c.a_high * (1.0 + 0.5 * l);
}

ClusterRegime two_cluster_thresholds(const ClusterSpec& c) {
    c.validate();
    if (c.a_low == c.a_high && 2 * c.k == c.n) {
        throw PreconditionError("two_cluster_thresholds: fully symmetric case; use solve_homogeneous");
    }
    const ClusterField probe(c, 1.0);
    const double end = probe.gamma_end();
    const double split = std::min(probe.gamma_split(), end);
    const double tiny = end * 1e-12;

    std::vector<double> zeros;
    for (bool upper : {true, false}) {
        auto phi = [&](double g) { return critical_value(c, g, upper); };
        const double pieces[3] = {tiny, split, end};
        for (int i = 0; i < 2; ++i) {
            const double lo = pieces[i];
            const double hi = pieces[i + 1];
            if (!(hi > lo)) continue;
            if ((phi(lo) > 0.0) != (phi(hi) > 0.0)) {
                zeros.push_back(bisect_predicate([&](double g) { return phi(g) > 0.0; }, lo, hi));
            }
        }
    }
    std::sort(zeros.begin(), zeros.end());
    if (zeros.size() == 3) return NonMonotoneRegime{zeros[0], zeros[1], zeros[2]};
    if (zeros.size() == 1) return UnimodalRegime{zeros[0]};
    throw Error("two_cluster_thresholds: found " + std::to_string(zeros.size()) + " critical-value zeros");
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi > lo && std::isfinite(hi))) throw InvalidInput("grid: need 0 < lo < hi");
    if (count < 2) throw InvalidInput("grid: need at least two points");
    std::vector<double> out(count);
    const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(ratio * static_cast<double>(i));
    out.front() = lo;
    out.back() = hi;
    return out;
}

BifurcationDiagram sweep(const SweepFamily& family, const std::vector<double>& grid, unsigned threads) {
    if (grid.size() < 2) throw InvalidInput("grid: need at least two points");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(std::isfinite(grid[i]) && grid[i] > 0.0)) throw InvalidInput("grid: values must be positive and finite");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidInput("grid: values must be strictly increasing");
    }
    const Family fam = make_family(family);

    std::vector<std::size_t> counts(grid.size());
    std::vector<std::vector<std::pair<double, Stability>>> solved(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
        counts[i] = fam.count(grid[i]);
        solved[i] = fam.solve(grid[i]);
    });

    std::vector<double> changes;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        scan_interval(fam, grid[i], counts[i], grid[i + 1], counts[i + 1], 4, changes);
    }

    BifurcationDiagram out;
    out.gammas = grid;
    std::optional<double> symmetric;
    if (fam.regime == RegimeTag::Homogeneous) {
        // The symmetric point's leading eigenvalue crosses zero at a / N.
        auto unstable = [&](double g) {
            const double centre = fam.a_hom / (static_cast<double>(fam.n) * g);
            const MarketParams p(g, std::vector<double>(fam.n, fam.a_hom));
            const PreferenceState s(Vector::Constant(static_cast<Eigen::Index>(fam.n), centre));
            return classify_stability(p, s).eigenvalues.front().real() > 0.0;
        };
        if (unstable(grid.front()) != unstable(grid.back())) {
            symmetric = bisect_predicate(unstable, grid.front(), grid.back());
        }
    }
    for (double g : changes) {
        const bool pitchfork = symmetric && std::abs(g - *symmetric) <= 1e-9 * std::max(1.0, g);
        out.thresholds.push_back(Threshold{pitchfork ? *symmetric : g,
                                           pitchfork ? ThresholdKind::SymmetryBreaking : ThresholdKind::SaddleNode});
        if (pitchfork) symmetric.reset();
    }
    if (symmetric) out.thresholds.push_back(Threshold{*symmetric, ThresholdKind::SymmetryBreaking});
    std::sort(out.thresholds.begin(), out.thresholds.end(),
              [](const Threshold& l, const Threshold& r) { return l.gamma < r.gamma; });

    std::sort(changes.begin(), changes.end());
    std::vector<double> bounds{grid.front()};
    bounds.insert(bounds.end(), changes.begin(), changes.end());
    bounds.push_back(grid.back());
    std::vector<std::size_t> regime_counts;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const std::size_t c = fam.count(0.5 * (bounds[i] + bounds[i + 1]));
        if (regime_counts.empty() || regime_counts.back() != c) regime_counts.push_back(c);
    }
    for (std::size_t i = 0; i < regime_counts.size(); ++i) {
        out.regime_string += (i ? "," : "") + std::to_string(regime_counts[i]);
    }

    out.points.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto interval = static_cast<std::size_t>(std::upper_bound(changes.begin(), changes.end(), grid[i]) -
                                                       changes.begin());
        for (std::size_t r = 0; r < solved[i].size(); ++r) {
            out.points[i].push_back(BranchPoint{solved[i][r].first, solved[i][r].second,
                                                "i" + std::to_string(interval) + "r" + std::to_string(r)});
        }
    }
    return out;
}

}  // namespace wkh

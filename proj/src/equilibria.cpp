#include "wkh/equilibria.hpp"

#include "wkh/errors.hpp"
#include "wkh/parallel.hpp"
#include "wkh/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace wkh {

namespace {

constexpr double kStabilityBand = 1e-8;
constexpr double kZeroRoot = 1e-9;

Stability from_slope(const ClusterField::Root& r) {
    if (r.tangent) return Stability::Marginal;
    return classify_real_part(r.slope);
}

std::vector<double> nonzero_roots(const ClusterField& field) {
    std::vector<double> out;
    for (const auto& r : field.roots()) {
        if (std::abs(r.delta) > kZeroRoot) out.push_back(r.delta);
    }
    return out;
}

double binomial(std::size_t n, std::size_t k) {
    double c = 1.0;
    for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
    return c;
}

// Subsets of {0..m-1} of size k, in lexicographic order.
template <class Fn>
void for_each_subset(std::size_t m, std::size_t k, Fn&& fn) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        fn(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == m - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

bool lex_less(const StationaryPoint& l, const StationaryPoint& r) {
    const Vector& x = l.state.values();
    const Vector& y = r.state.values();
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv;
    double out = 0.0;
    while (index > 0) {
        out += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return out;
}

std::vector<std::uint64_t> first_primes(std::size_t count) {
    std::vector<std::uint64_t> primes;
    for (std::uint64_t c = 2; primes.size() < count; ++c) {
        bool prime = true;
        for (auto q : primes) {
            if (q * q > c) break;
            if (c % q == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(c);
    }
    return primes;
}

// Full state from the first N-1 coordinates, eliminating the last one on the simplex.
Vector complete(const MarketParams& p, const Vector& x) {
    const Vector& a = p.a();
    const Eigen::Index m = x.size();
    Vector j(m + 1);
    j.head(m) = x;
    j(m) = a(m) * (1.0 / p.gamma() - x.cwiseQuotient(a.head(m)).sum());
    return j;
}

std::optional<Vector> damped_newton(const MarketParams& p, Vector x) {
    const Vector& a = p.a();
    const Eigen::Index m = x.size();
    Vector f;
    auto merit = [&](const Vector& y, Vector& full) {
        detail::field_into(p, complete(p, y), full);
        return full.head(m).squaredNorm();
    };
    double phi = merit(x, f);
    for (int iter = 0; iter < 100; ++iter) {
        if (sup_norm(f) < 1e-13) break;
        const Vector j = complete(p, x);
        const Matrix jac = jacobian(p, PreferenceState(j));
        Matrix d = jac.topLeftCorner(m, m);
        d -= jac.col(m).head(m) * (a(m) * a.head(m).cwiseInverse()).transpose();
        const Vector step = d.partialPivLu().solve(-f.head(m));
        if (!step.allFinite()) return std::nullopt;
        double lambda = 1.0;
        Vector trial;
        Vector ft;
        double phi_t = 0.0;
        while (true) {
            trial = x + lambda * step;
            phi_t = merit(trial, ft);
            if (std::isfinite(phi_t) && phi_t <= (1.0 - 1e-4 * lambda) * phi) break;
            lambda *= 0.5;
            if (lambda < 1e-10) break;
        }
        if (lambda < 1e-10) {
            // No descent along the Newton direction; accept only if already tiny.
            break;
        }
        const double moved = sup_norm(trial - x);
        x = trial;
        f = ft;
        phi = phi_t;
        if (moved < 1e-15 * std::max(1.0, sup_norm(x))) break;
    }
    if (!(sup_norm(f) < 1e-11)) return std::nullopt;
    return complete(p, x);
}

}  // namespace

const char* to_string(Stability s) noexcept {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
    }
    return "marginal";
}

const char* to_string(Source s) noexcept {
    switch (s) {
        case Source::Symmetric: return "symmetric";
        case Source::HomogeneousBranch: return "homogeneous";
        case Source::TwoSellerBranch: return "two_seller";
        case Source::TwoClusterBranch: return "two_cluster";
        case Source::MultistartNewton: return "multistart_newton";
    }
    return "multistart_newton";
}

Stability classify_real_part(double max_real) noexcept {
    if (max_real < -kStabilityBand) return Stability::Stable;
    if (max_real > kStabilityBand) return Stability::Unstable;
    return Stability::Marginal;
}

Spectrum classify_stability(const MarketParams& p, const PreferenceState& s) {
    const double res = sup_norm(vector_field(p, s));
    if (!(res < 1e-8)) {
        throw PreconditionError("classify_stability: state is not stationary (residual " + std::to_string(res) + ")");
    }
    Eigen::EigenSolver<Matrix> solver(jacobian(p, s), false);
    if (solver.info() != Eigen::Success) throw Error("classify_stability: eigenvalue iteration did not converge");
    Spectrum out;
    const auto& ev = solver.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
              [](const std::complex<double>& l, const std::complex<double>& r) {
                  if (l.real() != r.real()) return l.real() > r.real();
                  return l.imag() > r.imag();
              });
    out.stability = classify_real_part(out.eigenvalues.front().real());
    return out;
}

bool contraction_certificate(const MarketParams& p) noexcept { return p.gamma() > 0.5 * p.a_max(); }

StationaryPoint make_point(const MarketParams& p, const PreferenceState& s, Provenance provenance,
                           std::optional<Stability> reduced) {
    Spectrum spec = classify_stability(p, s);
    StationaryPoint pt{s, sup_norm(vector_field(p, s)), std::move(spec.eigenvalues), spec.stability, reduced,
                       std::move(provenance)};
    return pt;
}

std::vector<StationaryPoint> deduplicate(std::vector<StationaryPoint> points, double tol) {
    std::vector<StationaryPoint> out;
    for (auto& pt : points) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const StationaryPoint& q) {
            return sup_norm(q.state.values() - pt.state.values()) < tol;
        });
        if (!seen) out.push_back(std::move(pt));
    }
    return out;
}

double homogeneous_fold_gamma(std::size_t n, std::size_t k, double a) {
    const ClusterSpec spec{n, k, a, a};
    spec.validate();
    const double critical = a / static_cast<double>(n);
    if (2 * k == n) return critical;
    auto has_nonzero = [&](double g) { return !nonzero_roots(ClusterField(spec, g)).empty(); };
    double lo = critical;
    double hi = ClusterField(spec, critical).gamma_end();
    if (!has_nonzero(lo)) return lo;
    while (has_nonzero(hi)) hi *= 1.5;
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (has_nonzero(mid) ? lo : hi) = mid;
    }
    return lo;
}

std::size_t homogeneous_point_count(std::size_t n, double a, double gamma) {
    double count = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
        count += static_cast<double>(nonzero_roots(ClusterField(ClusterSpec{n, k, a, a}, gamma)).size()) *
                 binomial(n - 1, k);
    }
    return static_cast<std::size_t>(count);
}

HomogeneousEquilibriumSet solve_homogeneous(const MarketParams& p) {
    if (!p.is_homogeneous()) throw UnsupportedCase("solve_homogeneous: attractiveness values are not all equal");
    const std::size_t n = p.n();
    if (n > 25) throw CombinatorialExplosion("solve_homogeneous: N > 25 would produce 2^N - 1 points");
    const double a = p.a_max();
    const double gamma = p.gamma();

    HomogeneousEquilibriumSet out;
    out.gamma_critical = a / static_cast<double>(n);
    for (std::size_t k = 1; k < n; ++k) {
        out.uniqueness_gamma = std::max(out.uniqueness_gamma, homogeneous_fold_gamma(n, k, a));
    }

    const double centre = a / (static_cast<double>(n) * gamma);
    Vector sym = Vector::Constant(static_cast<Eigen::Index>(n), centre);
    out.points.push_back(make_point(p, PreferenceState(sym), Provenance{Source::Symmetric, 0, 0, "symmetric"}));

    out.roots_by_k.resize(n - 1);
    for (std::size_t k = 1; k < n; ++k) {
        const ClusterField field(ClusterSpec{n, k, a, a}, gamma);
        out.roots_by_k[k - 1] = nonzero_roots(field);
        for (double delta : out.roots_by_k[k - 1]) {
            // The last coordinate is always in the undisplaced group.
            const double base = (a / gamma - static_cast<double>(k) * delta) / static_cast<double>(n);
            const int sign = delta > 0.0 ? 1 : -1;
            for_each_subset(n - 1, k, [&](const std::vector<std::size_t>& group) {
                Vector j = Vector::Constant(static_cast<Eigen::Index>(n), base);
                std::string label = "k=" + std::to_string(k) + (sign > 0 ? ",+," : ",-,") + "{";
                for (std::size_t i = 0; i < group.size(); ++i) {
                    j(static_cast<Eigen::Index>(group[i])) += delta;
                    label += (i ? " " : "") + std::to_string(group[i]);
                }
                label += "}";
                // The root's own slope classifies the point inside its group subspace.
                std::optional<Stability> reduced;
                for (const auto& r : field.roots()) {
                    if (r.delta == delta) reduced = from_slope(r);
                }
                out.points.push_back(
                    make_point(p, PreferenceState(std::move(j)), Provenance{Source::HomogeneousBranch, k, sign, label},
                               reduced));
            });
        }
    }
    return out;
}

std::vector<StationaryPoint> solve_two_seller(const MarketParams& p) {
    if (p.n() != 2) throw UnsupportedCase("solve_two_seller: requires exactly two sellers");
    const ClusterField field(ClusterSpec{2, 1, p.a_min(), p.a_max()}, p.gamma());
    const auto roots = field.roots();
    std::vector<StationaryPoint> out;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        Provenance prov{Source::TwoSellerBranch, 0, 0, "root " + std::to_string(i + 1) + "/" + std::to_string(roots.size())};
        out.push_back(make_point(p, field.lift(roots[i].delta), std::move(prov), from_slope(roots[i])));
        // A tangent root has a zero eigenvalue up to rounding; keep the 1-D verdict.
        if (roots[i].tangent) out.back().stability = Stability::Marginal;
    }
    return out;
}

std::vector<StationaryPoint> solve_two_cluster(const ClusterSpec& c, double gamma) {
    const ClusterField field(c, gamma);
    const MarketParams p = c.params(gamma);
    const auto roots = field.roots();
    std::vector<StationaryPoint> out;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        Provenance prov{Source::TwoClusterBranch, c.k, 0, "root " + std::to_string(i + 1) + "/" + std::to_string(roots.size())};
        out.push_back(make_point(p, field.lift(roots[i].delta), std::move(prov), from_slope(roots[i])));
        if (roots[i].tangent && out.back().stability == Stability::Stable) out.back().stability = Stability::Marginal;
    }
    return out;
}

constexpr std::size_t kOrbitCap = 4096;

GeneralSolution solve_general(const MarketParams& p, std::size_t starts, std::uint64_t seed, unsigned threads) {
    if (starts < 1) throw InvalidInput("starts: must be at least 1");
    const std::size_t n = p.n();
    const auto primes = first_primes(n + 2);
    std::vector<double> shift(n + 2);
    StreamRng rng(seed, 0);
    for (auto& s : shift) s = rng.uniform();

    std::vector<std::optional<Vector>> found(starts);
    parallel_for(starts, threads, [&](std::size_t idx) {
        Vector u(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            double v = radical_inverse(idx + 1, primes[i]) + shift[i];
            v -= std::floor(v);
            u(static_cast<Eigen::Index>(i)) = v;
        }
        // Sellers with equal a and equal J stay equal under the flow. Some starts sit
        // on such tied subspaces so Newton can reach the saddles inside them:
        // ties within each attractiveness class, or two random levels.
        if (idx % 4 == 1 && !p.is_homogeneous()) {
            for (std::size_t i = 1; i < n; ++i) {
                if (p.a()(static_cast<Eigen::Index>(i)) == p.a()(static_cast<Eigen::Index>(i - 1))) {
                    u(static_cast<Eigen::Index>(i)) = u(static_cast<Eigen::Index>(i - 1));
                }
            }
        } else if (idx % 2 == 1) {
            double cut = radical_inverse(idx + 1, primes[n + 1]) + shift[n + 1];
            cut -= std::floor(cut);
            for (auto& v : u) v = v < cut ? 0.0 : 1.0;
        }
        // One step of J <- a * softmax(J) / gamma from a scaled point of the box that
        // holds every equilibrium. The scale sweeps from the uniform centre of the
        // simplex out to the one-leader corners.
        double scale = radical_inverse(idx + 1, primes[n]) + shift[n];
        scale -= std::floor(scale);
        const Vector j0 = p.a().cwiseProduct(softmax(u * (scale * p.a_max() / p.gamma()))) / p.gamma();
        found[idx] = damped_newton(p, j0.head(static_cast<Eigen::Index>(n - 1)));
    });

    GeneralSolution out;
    std::vector<Vector> roots;
    auto add = [&](const Vector& v) {
        const bool seen = std::any_of(roots.begin(), roots.end(), [&](const Vector& q) { return sup_norm(q - v) < 1e-7; });
        if (!seen) roots.push_back(v);
        return !seen;
    };
    for (auto& f : found) {
        if (!f) {
            ++out.failed_starts;
            continue;
        }
        ++out.converged_starts;
        add(*f);
    }
    // Swapping two sellers with equal a maps equilibria to equilibria. Close the
    // set under those swaps while it stays small.
    for (std::size_t r = 0; r < roots.size() && roots.size() < kOrbitCap; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = i + 1; k < n && p.a()(static_cast<Eigen::Index>(k)) == p.a()(static_cast<Eigen::Index>(i)); ++k) {
                Vector v = roots[r];
                std::swap(v(static_cast<Eigen::Index>(i)), v(static_cast<Eigen::Index>(k)));
                add(v);
            }
        }
    }
    std::vector<StationaryPoint> points;
    points.reserve(roots.size());
    for (const auto& v : roots) points.push_back(make_point(p, PreferenceState(v), Provenance{Source::MultistartNewton, 0, 0, "newton"}));
    std::sort(points.begin(), points.end(), lex_less);
    out.points = std::move(points);
    return out;
}

}  // namespace wkh

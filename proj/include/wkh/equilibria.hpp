#pragma once

#include "wkh/model.hpp"
#include "wkh/reduced_field.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wkh {

enum class Stability { Stable, Unstable, Marginal };

const char* to_string(Stability s) noexcept;

// Maximum real part < -1e-8 is Stable, > 1e-8 Unstable, anything else Marginal.
Stability classify_real_part(double max_real) noexcept;

enum class Source { Symmetric, HomogeneousBranch, TwoSellerBranch, TwoClusterBranch, MultistartNewton };

const char* to_string(Source s) noexcept;

struct Provenance {
    Source source = Source::MultistartNewton;
    std::size_t k = 0;  // homogeneous: size of the displaced group
    int sign = 0;       // homogeneous: sign of the displacement
    std::string label;
};

struct StationaryPoint {
    PreferenceState state;  // sorted seller order
    double residual = 0.0;  // sup-norm of the field
    std::vector<std::complex<double>> eigenvalues;  // descending real part
    Stability stability = Stability::Marginal;
    std::optional<Stability> reduced_stability;  // scalar reduced field, when one exists
    Provenance provenance;

    double max_real_part() const { return eigenvalues.empty() ? 0.0 : eigenvalues.front().real(); }
};

struct Spectrum {
    std::vector<std::complex<double>> eigenvalues;  // descending real part, then imaginary part
    Stability stability;
};

// Dense eigen-decomposition of the Jacobian. Throws PreconditionError unless
// the field's sup-norm at s is below 1e-8.
Spectrum classify_stability(const MarketParams& p, const PreferenceState& s);

// gamma > a_N / 2: the field is a contraction and has one global attractor.
bool contraction_certificate(const MarketParams& p) noexcept;

struct HomogeneousEquilibriumSet {
    double gamma_critical = 0.0;    // a / N: the symmetric point loses stability below it
    double uniqueness_gamma = 0.0;  // above this the symmetric point is the only one
    std::vector<StationaryPoint> points;
    // Nonzero roots of the scalar equation for k displaced coordinates, at index k-1.
    std::vector<std::vector<double>> roots_by_k;
};

// Throws UnsupportedCase for heterogeneous markets and CombinatorialExplosion for N > 25.
HomogeneousEquilibriumSet solve_homogeneous(const MarketParams& p);

// Number of points solve_homogeneous would return, without materializing them.
std::size_t homogeneous_point_count(std::size_t n, double a, double gamma);

// Largest gamma at which the k-group scalar equation still has nonzero roots.
double homogeneous_fold_gamma(std::size_t n, std::size_t k, double a);

// Throws UnsupportedCase unless N = 2.
std::vector<StationaryPoint> solve_two_seller(const MarketParams& p);

std::vector<StationaryPoint> solve_two_cluster(const ClusterSpec& c, double gamma);

struct GeneralSolution {
    std::vector<StationaryPoint> points;  // deduplicated, lexicographic
    std::size_t converged_starts = 0;
    std::size_t failed_starts = 0;
    bool heuristic = true;  // the list may be incomplete
};

// Damped Newton on the simplex-reduced system from shifted Halton starts. The
// result is closed under swaps of sellers with equal attractiveness.
GeneralSolution solve_general(const MarketParams& p, std::size_t starts = 500, std::uint64_t seed = 0,
                              unsigned threads = 1);

// Greedy deduplication in sup-norm, keeping first occurrences.
std::vector<StationaryPoint> deduplicate(std::vector<StationaryPoint> points, double tol = 1e-7);

// Builds a point with residual and full spectrum.
StationaryPoint make_point(const MarketParams& p, const PreferenceState& s, Provenance provenance,
                           std::optional<Stability> reduced = std::nullopt);

}  // namespace wkh
